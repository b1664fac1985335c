use std::collections::{BTreeSet, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use invofactor::algebra::{acceptable, Acceptability, Field, QuadPoly, Scalar};
use invofactor::factorize::adjacency::{adjacency_free, adjacency_strat, Adjacency};
use invofactor::factorize::certificate::{verify_certificate, Certificate};
use invofactor::factorize::classify::{classify3, Flavor};
use invofactor::factorize::invariant::{comb_vector, commuting_pair, finite_factor, invariant_closure, vector_comb};
use invofactor::factorize::pipeline::{elementary_factor_pq, factor_four, factor_three, PipelineOptions};
use invofactor::factorize::scalar::{scalar_id_factors, scalar_triple_2x2};
use invofactor::factorize::shift_pair::{pair_index, shift_pair, PAIR_BLOCK};
use invofactor::factorize::transport::component_evidence;
use invofactor::glsearch::{census, lambda_stable_search, product_membership, product_set, Budget, SmallGl};
use invofactor::linalg::{similar_to_inverse, Mat};
use invofactor::modulestruct::build_strat_periodic;
use invofactor::opcore::{
    check_annihilated, cyclic_window_cert, equal_on_window, BasisIndex, LazyOp, LinComb, RepAut, Window, WindowSpec,
};

const BIN: &str = env!("CARGO_BIN_EXE_invofactor");

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>, what: &str) -> Result<T, String> {
    r.map_err(|e| format!("{what}: {e}"))
}

fn fp(p: u64) -> Field {
    Field::prime(p).unwrap()
}

fn poly(s: &str, f: Field) -> QuadPoly {
    QuadPoly::parse(s, f).unwrap()
}

/// Certificates produced along the way, re-verified out of process at the end.
#[derive(Default)]
struct Corpus {
    certs: Vec<(String, RepAut, Certificate)>,
}

impl Corpus {
    fn add(&mut self, name: &str, u: &RepAut, c: Certificate) {
        self.certs.push((name.to_string(), u.clone(), c));
    }
}

fn product(ms: &[Mat]) -> Mat {
    ms.iter().skip(1).fold(ms[0].clone(), |acc, m| acc.mul(m).unwrap())
}

fn scalar_triple() -> Outcome {
    let f = fp(5);
    let inv = poly("t^2-1", f);
    let a = Mat::from_i64(f, &[&[1, 0], &[0, 4]]);
    let b = Mat::from_i64(f, &[&[0, 1], &[1, 0]]);
    let c = Mat::from_i64(f, &[&[0, 3], &[2, 0]]);
    let two = Mat::scalar(&f.from_i64(2), 2);
    ensure!(product(&[a.clone(), b.clone(), c.clone()]) == two, "ABC != 2I");
    for (name, m) in [("A", &a), ("B", &b), ("C", &c)] {
        ensure!(m.mul(m).unwrap() == Mat::identity(f, 2), "{name}^2 != I");
    }
    let built = ok(scalar_triple_2x2(&f.from_i64(2), [&inv, &inv, &inv]), "scalar_triple_2x2")?;
    ensure!(built == [a, b, c], "constructed triple differs: {built:?}");
    Ok("ABC = 2I, A² = B² = C² = I over F5".into())
}

fn brute_gl2(q: u32) -> Vec<(u64, Mat)> {
    let g = SmallGl::new(2, q).unwrap();
    (0..g.space_size())
        .map(|k| (k, g.to_mat(&g.unpack(k))))
        .filter(|(_, m)| !m.det().unwrap().is_zero())
        .collect()
}

fn census_agreement() -> Outcome {
    let b = Budget::default();
    let mut lines = Vec::new();
    for q in [3u32, 5] {
        let f = fp(q as u64);
        let inv = poly("t^2-1", f);
        let gl = brute_gl2(q);
        let c = ok(census(2, 4, &inv, &b), "census")?;
        let four: BTreeSet<u64> = ok(product_set(2, 4, &inv, &b), "product_set")?.into_iter().collect();
        let one = f.one();
        let minus = -&one;
        let pm1: BTreeSet<u64> = gl
            .iter()
            .filter(|(_, m)| {
                let d = m.det().unwrap();
                d == one || d == minus
            })
            .map(|(k, _)| *k)
            .collect();
        if q == 3 {
            ensure!(c.total_exact() == 48 && four.len() == 48 && gl.len() == 48, "GL2(F3): {} products", c.total_exact());
        } else {
            ensure!(c.total_exact() == 240 && pm1.len() == 240, "GL2(F5): {} products", c.total_exact());
        }
        ensure!(four == pm1, "four-involution products differ from det ±1 over F{q}");
        let two: BTreeSet<u64> = ok(product_set(2, 2, &inv, &b), "product_set")?.into_iter().collect();
        let sti: BTreeSet<u64> =
            gl.iter().filter(|(_, m)| similar_to_inverse(m).unwrap()).map(|(k, _)| *k).collect();
        ensure!(two == sti, "two-involution products differ from similar_to_inverse over F{q}");
        lines.push(format!("F{q}: {} four-products, {} two-products", four.len(), two.len()));
    }
    Ok(lines.join("; "))
}

fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).output().expect("spawn invofactor")
}

fn necessity(dir: &Path) -> Outcome {
    let f = fp(7);
    let inv = poly("t^2-1", f);
    let lambda = f.from_i64(3);
    ensure!(!lambda.pow(4).unwrap().is_one(), "3^4 = 1 in F7");
    let verdict = ok(acceptable(&lambda, [&inv, &inv, &inv]), "acceptable")?;
    ensure!(verdict == Acceptability::No, "acceptable returned {}", verdict.name());

    let u = RepAut::scalar(&lambda).unwrap();
    let op = dir.join("scalar3_f7.json");
    std::fs::write(&op, u.to_json().to_string()).unwrap();
    let out = run_cli(&["factor", "--input", op.to_str().unwrap(), "--polys", "t^2-1;t^2-1;t^2-1"]);
    ensure!(out.status.code() == Some(2), "factor exited with {:?}", out.status.code());
    let body: serde_json::Value = ok(serde_json::from_slice(&out.stdout), "refusal json")?;
    ensure!(body["status"] == "refused", "refusal body {body}");

    let polys = [inv.clone(), inv.clone(), inv];
    let hit = ok(lambda_stable_search(&Mat::zeros(f, 0, 0), &lambda, &polys, 6, &Budget::default()), "search")?;
    ensure!(hit.is_none(), "search found q = {}", hit.unwrap().q);
    Ok(format!("acceptable = No, CLI exit 2 ({}), search to q = 6 empty", body["reason"]))
}

fn shift_pairs() -> Outcome {
    let f = fp(5);
    let cases = [("t^2-1", "t^2-1"), ("(t-1)^2", "t^2-1"), ("t^2-1", "t^2+1")];
    let win = Window::slots(PAIR_BLOCK, 0..=63);
    for (ps, qs) in cases {
        let t = Instant::now();
        let (p, q) = (poly(ps, f), poly(qs, f));
        let (a, b) = ok(shift_pair(&p, &q), "shift_pair")?;
        ensure!(check_annihilated(&a, &p, &win).passed(), "a not annihilated by {p}");
        ensure!(check_annihilated(&b, &q, &win).passed(), "b not annihilated by {q}");
        let v = LazyOp::compose(&[a, b]).unwrap();
        let r = cyclic_window_cert(&v, &LinComb::unit(pair_index(1), f), 16);
        ensure!(r.passed(), "({p}, {q}): cyclic cert failed: {:?}", r.error.or(r.dependence_at.map(|k| k.to_string())));
        ensure!(t.elapsed() < Duration::from_secs(1), "({p}, {q}) took {:?}", t.elapsed());
    }
    Ok("3 pairs: annihilated on slots 0..63, cyclic to depth 16".into())
}

fn check_adjacency(u: &RepAut, adj: &Adjacency, p_sharp: &QuadPoly) -> Result<(), String> {
    for spec in [WindowSpec::default(), WindowSpec::default().doubled()] {
        let w = Window::for_aut(u, &spec);
        ensure!(check_annihilated(&adj.a, p_sharp, &w).passed(), "a not annihilated by {p_sharp}");
        let back = LazyOp::compose(&[adj.a.invert().unwrap(), adj.v.clone()]).unwrap();
        ensure!(equal_on_window(&back, u, &w).passed(), "a⁻¹v != u");
    }
    for r in ok(component_evidence(&adj.v, &adj.components, 12), "evidence")? {
        ensure!(r.passed(), "elementarity evidence failed at depth 12");
    }
    Ok(())
}

fn adjacency() -> Outcome {
    let f = fp(5);
    let p1 = poly("(t-1)(t-2)", f);
    let p_sharp = p1.reciprocal().unwrap();
    let comp = Mat::companion(&poly("t^2-t-1", f));
    let torsion = RepAut::builder(f).periodic("P0", comp.clone()).build().unwrap();
    let s = ok(build_strat_periodic(&torsion, 4, 2), "stratification")?;
    check_adjacency(&torsion, &ok(adjacency_strat(&torsion, &s, &p_sharp), "adjacency_strat")?, &p_sharp)?;
    let free = RepAut::builder(f).shift("S0", f.one()).finite("F0", comp).build().unwrap();
    check_adjacency(&free, &ok(adjacency_free(&free, &p_sharp), "adjacency_free")?, &p_sharp)?;
    Ok(format!("strat and free adjacency annihilated by p# = {p_sharp}, evidence at depth 12"))
}

fn rank_one_f7() -> RepAut {
    let f = fp(7);
    RepAut::builder(f)
        .periodic("P0", Mat::scalar(&f.from_i64(3), 1))
        .perturb(BasisIndex::periodic("P0", 0, 0), LinComb::term(BasisIndex::periodic("P0", 1, 0), f.one()))
        .build()
        .unwrap()
}

fn four_factor(corpus: &mut Corpus) -> Outcome {
    let f = fp(7);
    let inv = poly("t^2-1", f);
    let u = rank_one_f7();
    let cert = ok(factor_four(&u, [&inv, &inv, &inv, &inv], &PipelineOptions::default()), "factor_four")?;
    ensure!(cert.factors.len() == 4, "{} factors", cert.factors.len());
    let mut seen = Vec::new();
    for spec in [WindowSpec::default(), WindowSpec::default().doubled()] {
        let w = Window::for_aut(&u, &spec);
        let r = verify_certificate(&u, &cert, &w);
        ensure!(r.passed(), "verification failed: {:?}", r.first_failure());
        let prod = cert.product().unwrap();
        ensure!(equal_on_window(&prod, &u, &w).passed(), "product differs from u");
        seen.push(w.len());
    }
    corpus.add("four_factor_rank_one_f7", &u, cert);
    Ok(format!("product matches u on windows of {} and {} indices", seen[0], seen[1]))
}

fn random_gl(rng: &mut ChaCha8Rng, f: Field, q: u64, n: usize) -> Mat {
    loop {
        let rows: Vec<Vec<Scalar>> =
            (0..n).map(|_| (0..n).map(|_| f.from_i64(rng.gen_range(0..q) as i64)).collect()).collect();
        let m = Mat::from_rows(f, rows).unwrap();
        if !m.det().unwrap().is_zero() {
            return m;
        }
    }
}

fn random_poly(rng: &mut ChaCha8Rng, f: Field, q: u64) -> QuadPoly {
    QuadPoly::from_i64(f, 1, rng.gen_range(0..q) as i64, rng.gen_range(1..q) as i64).unwrap()
}

/// A random `n×n` matrix annihilated by `p`, `n` even.
fn random_annihilated(rng: &mut ChaCha8Rng, f: Field, q: u64, n: usize, p: &QuadPoly) -> Mat {
    let mut d = Mat::zeros(f, 0, 0);
    while d.rows() < n {
        let block = match p.roots() {
            Some((x, y)) if rng.gen_bool(0.5) => Mat::scalar(if rng.gen_bool(0.5) { &x } else { &y }, 1),
            _ if n - d.rows() >= 2 => Mat::companion(p),
            Some((x, _)) => Mat::scalar(&x, 1),
            None => unreachable!("n is even"),
        };
        d = d.direct_sum(&block);
    }
    let s = random_gl(rng, f, q, n);
    s.mul(&d).unwrap().mul(&s.inverse().unwrap()).unwrap()
}

fn closure_oracle(ms: [&Mat; 3], w: &[Vec<Scalar>], f: Field, n: usize) -> Vec<Vec<Scalar>> {
    let [a, b, c] = ms;
    let apply = |m: &Mat, v: &Vec<Scalar>| Mat::from_columns(f, n, std::slice::from_ref(v)).pipe(|col| m.mul(&col).unwrap());
    let words: Vec<Mat> = vec![
        Mat::identity(f, n),
        a.clone(),
        b.clone(),
        c.clone(),
        b.mul(a).unwrap(),
        c.mul(b).unwrap(),
        a.mul(c).unwrap(),
        c.mul(a).unwrap(),
    ];
    let mut cols = Vec::new();
    for m in &words {
        for v in w {
            let x = apply(m, v);
            cols.push((0..n).map(|i| x.get(i, 0).clone()).collect::<Vec<_>>());
        }
    }
    Mat::from_columns(f, n, &cols).image()
}

trait Pipe: Sized {
    fn pipe<T>(self, g: impl FnOnce(Self) -> T) -> T {
        g(self)
    }
}
impl<T> Pipe for T {}

fn invariant_lemma() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 4;
    let mut done = 0;
    let mut dims = Vec::new();
    while done < 50 {
        let q = if done % 2 == 0 { 3 } else { 5 };
        let f = fp(q);
        let ps = [0; 3].map(|_| random_poly(&mut rng, f, q));
        let ms = [0, 1, 2].map(|k| random_annihilated(&mut rng, f, q, n, &ps[k]));
        let abc = product(&ms);
        let rank = |l: &Scalar| abc.sub(&Mat::scalar(l, n)).unwrap().rank();
        let Some(lambda) = (1..q as i64).map(|x| f.from_i64(x)).filter(|l| rank(l) > 0).min_by_key(rank) else {
            continue;
        };
        if rank(&lambda) > 2 {
            continue;
        }
        let wmat = abc.sub(&Mat::scalar(&lambda, n)).unwrap();
        let w = wmat.image();
        let ops = [0, 1, 2].map(|k| finite_factor("X", &ms[k], &ps[k]).unwrap());
        let combs: Vec<LinComb> = w.iter().map(|v| vector_comb("X", v)).collect();
        let closure = ok(invariant_closure(&ops[0], &ops[1], &ops[2], &combs), "invariant_closure")?;
        let basis: Vec<Vec<Scalar>> = closure.iter().map(|x| comb_vector("X", n, x, f).unwrap()).collect();
        let span = Mat::from_columns(f, n, &basis);
        ensure!(span.rank() == basis.len(), "closure basis is dependent");
        ensure!(basis.len() <= 8 * w.len(), "dim {} > 8·{}", basis.len(), w.len());
        let with_w = Mat::from_columns(f, n, &[basis.clone(), w.clone()].concat());
        ensure!(with_w.rank() == basis.len(), "closure misses W");
        for m in &ms {
            let moved: Vec<Vec<Scalar>> = basis
                .iter()
                .map(|v| {
                    let x = m.mul(&Mat::from_columns(f, n, std::slice::from_ref(v))).unwrap();
                    (0..n).map(|i| x.get(i, 0).clone()).collect()
                })
                .collect();
            ensure!(
                Mat::from_columns(f, n, &[basis.clone(), moved].concat()).rank() == basis.len(),
                "closure not stable"
            );
        }
        let oracle = closure_oracle([&ms[0], &ms[1], &ms[2]], &w, f, n);
        ensure!(oracle.len() == basis.len(), "oracle dim {} vs {}", oracle.len(), basis.len());
        dims.push((w.len(), basis.len()));
        done += 1;
    }
    let proper = dims.iter().filter(|(_, d)| *d < n).count();
    ensure!(proper > 0, "no toy had a proper closure");
    Ok(format!("50 toys in GL4(F3), GL4(F5) with rank(w) ≤ 2; {proper} closures proper"))
}

fn commutation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut total = 0;
    for q in [3u64, 5, 7] {
        let f = fp(q);
        for _ in 0..200 {
            let n = 2 * rng.gen_range(1..=2);
            let (p, r) = (random_poly(&mut rng, f, q), random_poly(&mut rng, f, q));
            let a = random_annihilated(&mut rng, f, q, n, &p);
            let b = random_annihilated(&mut rng, f, q, n, &r);
            let [first, second] = ok(commuting_pair(&a, &p, &b, &r), "commuting_pair")?;
            let id = Mat::identity(f, n);
            let a_star = id.scale(&p.trace()).sub(&a).unwrap();
            let b_star = id.scale(&r.trace()).sub(&b).unwrap();
            let first_oracle = a.mul(&b_star).unwrap().add(&b.mul(&a_star).unwrap()).unwrap();
            let ab = a.mul(&b).unwrap();
            let second_oracle = ab.add(&ab.inverse().unwrap().scale(&(&p.norm() * &r.norm()))).unwrap();
            ensure!(first == first_oracle && second == second_oracle, "formula mismatch over F{q}");
            for m in [&first, &second] {
                ensure!(m.mul(&a).unwrap() == a.mul(m).unwrap(), "does not commute with a over F{q}");
                ensure!(m.mul(&b).unwrap() == b.mul(m).unwrap(), "does not commute with b over F{q}");
            }
            total += 1;
        }
    }
    Ok(format!("{total} random pairs over F3, F5, F7"))
}

fn perturbed(lambda: &Scalar, w: &Mat) -> RepAut {
    let f = lambda.field();
    let k = w.rows();
    let mut b = RepAut::builder(f).periodic("P0", Mat::scalar(lambda, 1));
    for i in 0..k {
        let image = LinComb::from_terms((0..k).map(|j| (BasisIndex::periodic("P0", j as u64, 0), w.get(j, i).clone())));
        b = b.perturb(BasisIndex::periodic("P0", i as u64, 0), image);
    }
    b.build().unwrap()
}

fn classification() -> Outcome {
    let f = fp(5);
    let budget = Budget::default().with_dim(4);
    let inv = poly("t^2-1", f);
    let uni = poly("(t-1)^2", f);
    let one_inv_two_uni = [inv.clone(), uni.clone(), uni];
    let mut cache: HashMap<(i64, usize, String, Flavor, bool), bool> = HashMap::new();
    let mut checked = 0;
    let mut yes = 0;
    let mut ws: Vec<Mat> = Vec::new();
    for x in 1..5 {
        ws.push(Mat::from_i64(f, &[&[x]]));
    }
    let g = SmallGl::new(2, 5).unwrap();
    for k in 0..g.space_size() {
        let m = g.to_mat(&g.unpack(k));
        if !m.det().unwrap().is_zero() {
            ws.push(m);
        }
    }
    for l in 1..5 {
        let lambda = f.from_i64(l);
        let gk = [SmallGl::new(1, 5).unwrap(), g.clone()];
        for w in &ws {
            let n = w.rows();
            let a = w.add(&Mat::scalar(&lambda, n)).unwrap();
            if a.det().unwrap().is_zero() {
                continue;
            }
            let key = format!("{:?}", gk[n - 1].class_key(&gk[n - 1].from_mat(&a).unwrap()));
            let u = perturbed(&lambda, w);
            for fl in Flavor::ALL {
                let d = ok(classify3(&u, fl), "classify3")?;
                let polys = fl.polys(f);
                let mut search = |ps: &[QuadPoly; 3], alt: bool| -> Result<bool, String> {
                    if let Some(v) = cache.get(&(l, n, key.clone(), fl, alt)) {
                        return Ok(*v);
                    }
                    // the complement is infinite, so λ·id must also factor on a 1- or 2-dimensional piece
                    let mut scalar = false;
                    for s in 1..=2 {
                        scalar |= ok(product_membership(&Mat::scalar(&lambda, s), ps, &budget), "scalar search")?.is_some();
                    }
                    let hit = scalar && ok(lambda_stable_search(&a, &lambda, ps, 4 - n, &budget), "search")?.is_some();
                    cache.insert((l, n, key.clone(), fl, alt), hit);
                    Ok(hit)
                };
                let found = search(&polys, false)?;
                ensure!(
                    d.product == found,
                    "λ = {lambda}, w = {w:?}, {fl}: classify3 says {} ({:?}), search says {found}",
                    d.product,
                    d.condition
                );
                if fl == Flavor::Involutions {
                    let alt = search(&one_inv_two_uni, true)?;
                    ensure!(alt == found, "λ = {lambda}, w = {w:?}: three involutions {found} vs one involution two unipotents {alt}");
                }
                checked += 1;
                yes += d.product as usize;
            }
        }
    }
    Ok(format!("{checked} (λ, w, flavor) cases agree, {yes} products, {} classes searched", cache.len()))
}

fn corpus_certificates(corpus: &mut Corpus) -> Result<(), String> {
    let opts = PipelineOptions::default();
    let f5 = fp(5);
    let f7 = fp(7);
    let inv5 = poly("t^2-1", f5);
    let inv7 = poly("t^2-1", f7);
    let uni5 = poly("(t-1)^2", f5);

    let shift = RepAut::shift(f5);
    corpus.add("shift_three_involutions", &shift, ok(factor_three(&shift, [&inv5, &inv5, &inv5], &opts), "shift")?);
    corpus.add("shift_four_unipotents", &shift, ok(factor_four(&shift, [&uni5, &uni5, &uni5, &uni5], &opts), "four")?);
    let torsion = RepAut::builder(f5).periodic("P0", Mat::companion(&poly("t^2-t-1", f5))).build().unwrap();
    corpus.add("torsion_companion", &torsion, ok(factor_three(&torsion, [&inv5, &inv5, &inv5], &opts), "torsion")?);
    let coupled = RepAut::builder(f5)
        .shift("S0", f5.one())
        .finite("F0", Mat::companion(&poly("t^2-t-1", f5)))
        .coupling(BasisIndex::new("F0", 1), LinComb::term(BasisIndex::new("S0", 2), f5.from_i64(3)))
        .build()
        .unwrap();
    corpus.add("coupled_shift", &coupled, ok(factor_three(&coupled, [&inv5, &inv5, &inv5], &opts), "coupled")?);
    let rank1 = perturbed(&f5.from_i64(2), &Mat::from_i64(f5, &[&[1]]));
    corpus.add("finite_rank_f5", &rank1, ok(factor_three(&rank1, [&inv5, &inv5, &inv5], &opts), "finite rank")?);
    let three = RepAut::builder(f7).shift("S0", f7.from_i64(3)).build().unwrap();
    corpus.add("elementary_3shift_f7", &three, ok(elementary_factor_pq(&three, &inv7, &inv7, &opts), "elementary")?);
    let two = RepAut::builder(f7).shift("S0", f7.one()).shift("S1", f7.one()).build().unwrap();
    corpus.add("elementary_two_shifts_f7", &two, ok(elementary_factor_pq(&two, &inv7, &inv7, &opts), "elementary")?);
    let space = RepAut::builder(f5)
        .finite("F0", Mat::identity(f5, 3))
        .periodic("P0", Mat::identity(f5, 1))
        .periodic("P1", Mat::identity(f5, 2))
        .build()
        .unwrap();
    let scaled = space.scaled(&f5.from_i64(2)).unwrap();
    corpus.add(
        "scalar_id_odd_layout",
        &scaled,
        ok(scalar_id_factors(&f5.from_i64(2), [&inv5, &inv5, &inv5], &space), "scalar id")?,
    );
    Ok(())
}

fn round_trip(corpus: &mut Corpus, dir: &Path) -> Outcome {
    corpus_certificates(corpus)?;
    for (name, u, cert) in &corpus.certs {
        let op = dir.join(format!("{name}.op.json"));
        let cp = dir.join(format!("{name}.cert.json"));
        std::fs::write(&op, u.to_json().to_string()).unwrap();
        std::fs::write(&cp, cert.to_json_string().unwrap()).unwrap();
        let out = run_cli(&["verify", "--op", op.to_str().unwrap(), "--cert", cp.to_str().unwrap()]);
        ensure!(
            out.status.success(),
            "{name}: verify exited {:?}\n{}",
            out.status.code(),
            String::from_utf8_lossy(&out.stdout)
        );
    }
    // CLI-issued certificate
    let op = dir.join("cli_shift.op.json");
    let cp = dir.join("cli_shift.cert.json");
    std::fs::write(&op, RepAut::shift(fp(5)).to_json().to_string()).unwrap();
    let out = run_cli(&["factor", "--input", op.to_str().unwrap(), "--polys", "t^2-1;t^2-1;t^2-1", "--out", cp.to_str().unwrap()]);
    ensure!(out.status.success(), "cli factor exited {:?}", out.status.code());
    let out = run_cli(&["verify", "--op", op.to_str().unwrap(), "--cert", cp.to_str().unwrap()]);
    ensure!(out.status.success(), "cli verify exited {:?}", out.status.code());
    Ok(format!("{} certificates re-verified by a fresh process", corpus.certs.len() + 1))
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().unwrap();
    let mut corpus = Corpus::default();
    let criteria: Vec<(&str, Duration, Box<dyn FnOnce(&mut Corpus) -> Outcome>)> = vec![
        ("scalar triple identity", Duration::from_millis(1), Box::new(|_| scalar_triple())),
        ("census agreement", Duration::from_secs(10), Box::new(|_| census_agreement())),
        ("necessity agreement", Duration::from_secs(60), Box::new(|_| necessity(dir.path()))),
        ("shift-pair construction", Duration::from_secs(3), Box::new(|_| shift_pairs())),
        ("adjacency constructions", Duration::from_secs(5), Box::new(|_| adjacency())),
        ("four-factor pipeline", Duration::from_secs(30), Box::new(four_factor)),
        ("invariant subspace closure", Duration::from_secs(10), Box::new(|_| invariant_lemma())),
        ("commutation identities", Duration::from_secs(5), Box::new(|_| commutation())),
        ("classification predicates", Duration::from_secs(300), Box::new(|_| classification())),
        ("certificate round-trip", Duration::from_secs(120), Box::new(|c| round_trip(c, dir.path()))),
    ];
    let mut failed = 0;
    for (k, (name, limit, run)) in criteria.into_iter().enumerate() {
        let t = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(|| run(&mut corpus))).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or(e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let elapsed = t.elapsed();
        let res = match res {
            Ok(_) if elapsed > limit => Err(format!("took {elapsed:?}, limit {limit:?}")),
            r => r,
        };
        match res {
            Ok(detail) => println!("PASS {:>2} {name} [{elapsed:.2?}]: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name} [{elapsed:.2?}]: {why}", k + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
