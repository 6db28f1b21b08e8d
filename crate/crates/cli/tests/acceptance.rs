//! End-to-end acceptance run. Prints one line per criterion and fails if any
//! criterion fails. Reference values come from small oracles written here
//! against the definitions, not from the library under test.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use iet_core::analysis::{
    box_dimension, cantor_intervals, frostman_measure, geometric_grid, golden_control, mc_balance,
    mc_jacobian_pushforward, prob_decay_sim, two_measure_evidence, BalanceConfig, BallScanConfig, BirkhoffConfig,
    BoxSet, DecayConfig, Dependence, NestedFamily, Verdict,
};
use iet_core::construction::{
    avoiding_path, check_angle_monotonicity, check_conditions_star, face_first_coordinate_at_least_half, make_schedule,
    restriction_columns_invariant, run_construction, ConstructionConfig, ExponentMap, PhaseContext,
};
use iet_core::geometry::{ball_section_fraction, concavity_test, random_simplex, simplex_volume_fraction, Body, ConcavityConfig};
use iet_core::induction::{induct, Iet, InductionError};
use iet_core::matrix::{IntMatrix, VisitationMatrix};
use iet_core::perm::{hyperelliptic_permutation, rauzy_class, special_permutations, LabeledPermutation};
use iet_core::planar::Polygon;
use iet_core::sampling::substream;
use iet_core::symplectic::{reciprocal_pairing, verify_invariance};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;

type Rows = (Vec<u8>, Vec<u8>);

/// Rauzy move on raw rows: the longer of the two last intervals wins; on
/// the losing row the loser moves right behind the winner.
fn oracle_move(p: &Rows, top_wins: bool) -> (Rows, u8, u8) {
    let (t, b) = p;
    let (w, l) = if top_wins { (*t.last().unwrap(), *b.last().unwrap()) } else { (*b.last().unwrap(), *t.last().unwrap()) };
    let rewrite = |row: &Vec<u8>| {
        let mut r = row[..row.len() - 1].to_vec();
        let at = r.iter().position(|&x| x == w).unwrap();
        r.insert(at + 1, l);
        r
    };
    let next = if top_wins { (t.clone(), rewrite(b)) } else { (rewrite(t), b.clone()) };
    (next, w, l)
}

fn rows(pi: &LabeledPermutation) -> Rows {
    (pi.top().to_vec(), pi.bottom().to_vec())
}

fn to_perm(r: &Rows) -> LabeledPermutation {
    LabeledPermutation::new(r.0.clone(), r.1.clone()).unwrap()
}

fn oracle_class(seed: &Rows) -> (BTreeSet<Rows>, Vec<(Rows, Rows)>) {
    let mut seen = BTreeSet::from([seed.clone()]);
    let mut edges = Vec::new();
    let mut queue = VecDeque::from([seed.clone()]);
    while let Some(p) = queue.pop_front() {
        for side in [true, false] {
            let (q, _, _) = oracle_move(&p, side);
            edges.push((p.clone(), q.clone()));
            if seen.insert(q.clone()) {
                queue.push_back(q);
            }
        }
    }
    (seen, edges)
}

/// Path matrix from raw moves: column `l` gains column `w`.
fn oracle_path<R: Rng>(start: &Rows, len: usize, rng: &mut R) -> (Vec<Vec<BigInt>>, Rows) {
    let d = start.0.len();
    let mut m: Vec<Vec<BigInt>> = (0..d).map(|i| (0..d).map(|j| BigInt::from(u8::from(i == j))).collect()).collect();
    let mut p = start.clone();
    for _ in 0..len {
        let (q, w, l) = oracle_move(&p, rng.gen());
        for row in m.iter_mut() {
            let add = row[w as usize - 1].clone();
            row[l as usize - 1] += add;
        }
        p = q;
    }
    (m, p)
}

/// `Omega_{ab} = 1` if `a` precedes `b` on top and follows it on the bottom.
fn oracle_omega(p: &Rows) -> Vec<Vec<BigInt>> {
    let d = p.0.len();
    let pos = |row: &Vec<u8>, s: usize| row.iter().position(|&x| x as usize == s).unwrap();
    (1..=d)
        .map(|a| {
            (1..=d)
                .map(|b| {
                    let top = pos(&p.0, a) < pos(&p.0, b);
                    let bottom = pos(&p.1, a) < pos(&p.1, b);
                    BigInt::from(match (top, bottom) {
                        (true, false) => 1,
                        (false, true) if a != b => -1,
                        _ => 0,
                    })
                })
                .collect()
        })
        .collect()
}

fn mat_mul(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let n = b[0].len();
    a.iter().map(|r| (0..n).map(|j| r.iter().zip(b).map(|(x, row)| x * &row[j]).sum()).collect()).collect()
}

fn transpose(a: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j].clone()).collect()).collect()
}

/// Leibniz expansion over all permutations.
fn leibniz(a: &[Vec<BigRational>]) -> BigRational {
    fn perms(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for p in perms(n - 1) {
            for i in 0..=p.len() {
                let mut q = p.clone();
                q.insert(i, n - 1);
                out.push(q);
            }
        }
        out
    }
    let n = a.len();
    let mut total = BigRational::from_integer(BigInt::from(0));
    for p in perms(n) {
        let inversions = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| p[i] > p[j]).count();
        let mut term = BigRational::from_integer(BigInt::from(if inversions % 2 == 0 { 1 } else { -1 }));
        for (i, &j) in p.iter().enumerate() {
            term *= &a[i][j];
        }
        total += term;
    }
    total
}

/// Volume of the simplex with these barycentric vertices, relative to `Delta`.
fn oracle_vertex_volume(vertices: &[Vec<BigRational>]) -> BigRational {
    let det = leibniz(vertices);
    if det < BigRational::from_integer(BigInt::from(0)) {
        -det
    } else {
        det
    }
}

fn normalized_columns(m: &[Vec<BigInt>]) -> Vec<Vec<BigRational>> {
    let d = m.len();
    (0..d)
        .map(|j| {
            let s: BigInt = m.iter().map(|r| r[j].clone()).sum();
            m.iter().map(|r| BigRational::new(r[j].clone(), s.clone())).collect()
        })
        .collect()
}

fn as_int(m: &[Vec<BigInt>]) -> IntMatrix {
    IntMatrix::from_rows(m)
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(t: Instant, limit: Duration) -> (bool, String) {
    let e = t.elapsed();
    (e <= limit, format!("{:.2}s of {}s", e.as_secs_f64(), limit.as_secs()))
}

fn class_rows(d: usize) -> Vec<Rows> {
    let seed = rows(&hyperelliptic_permutation(d).unwrap());
    oracle_class(&seed).0.into_iter().collect()
}

fn criterion_1() -> Outcome {
    let seed = hyperelliptic_permutation(4).unwrap();
    let t = Instant::now();
    let g = rauzy_class(&seed).unwrap();
    let (fast, time) = within(t, Duration::from_secs(1));
    let (vertices, edges) = oracle_class(&rows(&seed));
    let hubs = special_permutations(4).unwrap();
    let lib: BTreeSet<Rows> = g.vertices.iter().map(rows).collect();
    let mut indeg: HashMap<&Rows, usize> = HashMap::new();
    let mut outdeg: HashMap<&Rows, usize> = HashMap::new();
    for (a, b) in &edges {
        *outdeg.entry(a).or_default() += 1;
        *indeg.entry(b).or_default() += 1;
    }
    let regular = vertices.iter().all(|v| indeg.get(v) == Some(&2) && outdeg.get(v) == Some(&2));
    let lib_regular = g.in_degrees().iter().chain(&g.out_degrees()).all(|&x| x == 2);
    let members = vertices.contains(&rows(&hubs.left)) && vertices.contains(&rows(&hubs.right));
    let pass = vertices.len() == 7 && lib == vertices && regular && lib_regular && members && g.contains(&hubs.left) && fast;
    outcome(pass, format!("{} vertices (oracle {}), hubs present {members}, 2-in/2-out {regular}, {time}", lib.len(), vertices.len()))
}

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let mut rng = substream(2, 0);
    let mut checked = 0;
    let mut undefined = 0;
    let mut bad = 0;
    let classes = [class_rows(4), class_rows(5)];
    for trial in 0..1000 {
        let class = &classes[trial % 2];
        let d = class[0].0.len();
        let p = &class[rng.gen_range(0..class.len())];
        let den: i64 = rng.gen_range(1_000_000..2_000_000_000);
        let x: Vec<BigRational> = (0..d).map(|_| rat(rng.gen_range(1..den), den)).collect();
        let n = rng.gen_range(0..=100);
        let iet = Iet::new(x.clone(), to_perm(p)).unwrap();
        let tr = match induct(&iet, n) {
            Ok(tr) => tr,
            Err(InductionError::Undefined { .. }) => {
                undefined += 1;
                continue;
            }
            Err(e) => panic!("{e}"),
        };
        // replay with the oracle: contest by length, winner shrinks by the loser
        let mut y = x.clone();
        let mut q = p.clone();
        let mut m: Vec<Vec<BigInt>> = (0..d).map(|i| (0..d).map(|j| BigInt::from(u8::from(i == j))).collect()).collect();
        for _ in 0..n {
            let (t_last, b_last) = (*q.0.last().unwrap() as usize - 1, *q.1.last().unwrap() as usize - 1);
            let top_wins = y[t_last] > y[b_last];
            let (next, w, l) = oracle_move(&q, top_wins);
            let loser_len = y[l as usize - 1].clone();
            y[w as usize - 1] -= loser_len;
            for row in m.iter_mut() {
                let add = row[w as usize - 1].clone();
                row[l as usize - 1] += add;
            }
            q = next;
        }
        let mx: Vec<BigRational> =
            m.iter().map(|r| r.iter().zip(&y).map(|(a, b)| BigRational::from_integer(a.clone()) * b).sum()).collect();
        let ok = tr.induced.lengths() == y.as_slice()
            && *tr.matrix.as_matrix() == as_int(&m)
            && mx == x
            && tr.matrix.as_matrix().mul_rat_vec(tr.induced.lengths()) == x
            && tr.matrix.as_matrix().det() == BigInt::from(1);
        bad += usize::from(!ok);
        checked += 1;
    }
    let (fast, time) = within(t, Duration::from_secs(30));
    outcome(bad == 0 && checked > 900 && fast, format!("{checked} paths exact, {bad} mismatches, {undefined} ties skipped, {time}"))
}

fn criterion_3() -> Outcome {
    let t = Instant::now();
    let mut rng = substream(3, 0);
    let mut bad = 0;
    for trial in 0..1000 {
        let class = class_rows(4 + trial % 2);
        let p = &class[rng.gen_range(0..class.len())];
        let len = rng.gen_range(1..=100);
        let (m, q) = oracle_path(p, len, &mut rng);
        let lhs = mat_mul(&mat_mul(&transpose(&m), &oracle_omega(p)), &m);
        let oracle_ok = lhs == oracle_omega(&q);
        let lib_ok = verify_invariance(&as_int(&m), &to_perm(p), &to_perm(&q)).unwrap();
        bad += usize::from(!(oracle_ok && lib_ok));
    }
    let (fast, time) = within(t, Duration::from_secs(30));
    outcome(bad == 0 && fast, format!("1000 paths in R_4 and R_5, {bad} failures, {time}"))
}

fn criterion_4() -> Outcome {
    let t = Instant::now();
    let mut rng = substream(4, 0);
    let mut worst: f64 = 0.0;
    let mut ranks = BTreeSet::new();
    for trial in 0..100 {
        let class = class_rows(4 + trial % 2);
        let p = &class[rng.gen_range(0..class.len())];
        let (m, q) = oracle_path(p, 30, &mut rng);
        let r = reciprocal_pairing(&as_int(&m), &to_perm(p), &to_perm(&q)).unwrap();
        worst = worst.max(r.defect);
        ranks.insert(r.rank);
    }
    let (fast, time) = within(t, Duration::from_secs(30));
    outcome(worst < 1e-8 && fast, format!("max defect {worst:.3e} over 100 paths, ranks {ranks:?}, {time}"))
}

fn criterion_5() -> Outcome {
    let mut rng = substream(5, 0);
    let mut bad = 0;
    for trial in 0..1000 {
        let d = 2 + trial % 4;
        let class = class_rows(d);
        let p = &class[rng.gen_range(0..class.len())];
        let len = rng.gen_range(0..=40);
        let (m, _) = oracle_path(p, len, &mut rng);
        let formula = simplex_volume_fraction(&as_int(&m)).unwrap();
        let product: BigInt = (0..d).map(|j| m.iter().map(|r| r[j].clone()).sum::<BigInt>()).product();
        let expected = BigRational::new(BigInt::from(1), product);
        bad += usize::from(formula != oracle_vertex_volume(&normalized_columns(&m)) || formula != expected);
    }
    outcome(bad == 0, format!("1000 matrices with d in 2..=5, {bad} mismatches"))
}

fn criterion_6() -> Outcome {
    let t = Instant::now();
    let mut details = Vec::new();
    let mut pass = true;
    for (d, len, seed) in [(3usize, 1usize, 61u64), (4, 10, 62)] {
        let start = rows(&hyperelliptic_permutation(d).unwrap());
        let mut rng = substream(seed, 0);
        let (m, _) = oracle_path(&start, len, &mut rng);
        // W is the half x_1 >= x_2 of the simplex
        let mut w: Vec<Vec<BigRational>> =
            (0..d).map(|i| (0..d).map(|j| rat(i64::from(i == j), 1)).collect()).collect();
        w[1] = (0..d).map(|j| rat(i64::from(j < 2), 2)).collect();
        // projective image of W, normalized by the image of Delta
        let images: Vec<Vec<BigRational>> = w
            .iter()
            .map(|v| {
                let y: Vec<BigRational> =
                    m.iter().map(|r| r.iter().zip(v).map(|(a, b)| BigRational::from_integer(a.clone()) * b).sum()).collect();
                let s: BigRational = y.iter().sum();
                y.into_iter().map(|c| c / &s).collect()
            })
            .collect();
        let share = oracle_vertex_volume(&images) / oracle_vertex_volume(&normalized_columns(&m));
        let share = iet_core::matrix::rat_to_f64(&share);
        let r = mc_jacobian_pushforward(&as_int(&m), &w, 1_000_000, seed).unwrap();
        let ok = (r.estimate - share).abs() <= 3.0 * r.stderr && (r.claim_bound - share).abs() < 1e-12;
        pass &= ok && r.verdict == Verdict::Consistent;
        details.push(format!("d={d}: {:.5} vs {:.5} (se {:.1e})", r.estimate, share, r.stderr));
    }
    let (fast, time) = within(t, Duration::from_secs(120));
    outcome(pass && fast, format!("{}, {time}", details.join("; ")))
}

fn criterion_7() -> Outcome {
    let cfg = BalanceConfig { zeta: 4.0, k_factor: 2.0, m_max: 8, samples: 10_000, seed: 7, warmup_norm: 1000 };
    let r = mc_balance(&hyperelliptic_permutation(4).unwrap(), &cfg).unwrap();
    let pass = r.verdict == Verdict::Consistent && r.sigma_upper < 1.0;
    let fails: Vec<String> = r.failures.iter().map(|f| format!("{:.4}", f.estimate)).collect();
    outcome(
        pass,
        format!("sigma {:.3}, 95% upper {:.3}, failure fractions [{}]", r.sigma_hat, r.sigma_upper, fails.join(", ")),
    )
}

fn criterion_8() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    for dep in [Dependence::Independent, Dependence::AdversarialMarkov] {
        let cfg = DecayConfig {
            rho: 0.2,
            dependence: dep,
            length: 40,
            window_start: 5,
            epsilon: 0.1,
            samples: 100_000,
            seed: 8,
        };
        let r = prob_decay_sim(&cfg).unwrap();
        let closed_form = r.windows.iter().enumerate().all(|(l, w)| (w.claim_bound - 0.8f64.powi(l as i32 + 1)).abs() < 1e-12);
        let worst = r
            .windows
            .iter()
            .map(|w| if w.stderr > 0.0 { (w.estimate - w.claim_bound) / w.stderr } else { 0.0 })
            .fold(f64::NEG_INFINITY, f64::max);
        pass &= closed_form && r.verdict == Verdict::Consistent;
        details.push(format!("{dep:?}: {} windows, largest excess {worst:.2} sigma", r.windows.len()));
    }
    outcome(pass, details.join("; "))
}

fn reference_run() -> iet_core::construction::ConstructionRun {
    let schedule = make_schedule(0, ExponentMap::desk(), 3).unwrap();
    run_construction(&schedule, &ConstructionConfig::new(4), 1).unwrap()
}

fn criterion_9(run: &iet_core::construction::ConstructionRun, elapsed: Duration) -> Outcome {
    let grammar = run.verify();
    let star = check_conditions_star(&run.stages, run.config.zeta);
    let fourth = star.iter().all(|r| r.b_prime_ok);
    let balanced = star.iter().all(|r| r.a_balanced && r.b_balanced);
    let invariant = restriction_columns_invariant(&run.stages);
    let mono = check_angle_monotonicity(&run.stages);
    // oracle for the nesting: every column of a later product is a
    // non-negative combination of the earlier one's columns
    let nested = run.stages.windows(2).all(|w| {
        let inv = VisitationMatrix::try_from_matrix(w[0].cumulative.clone()).unwrap().inverse();
        inv.mul(&w[1].cumulative).is_nonnegative()
    });
    let pass = grammar.is_ok()
        && fourth
        && balanced
        && invariant
        && mono.first_ok
        && mono.last_ok
        && nested
        && elapsed <= Duration::from_secs(120);
    outcome(
        pass,
        format!(
            "grammar {}, (4) {fourth}, (1)/(3) {balanced}, restriction invariant {invariant}, monotone {}/{}, nested {nested}, {:.2}s",
            grammar.is_ok(),
            mono.first_ok,
            mono.last_ok,
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_10(run: &iet_core::construction::ConstructionRun) -> Outcome {
    let t = Instant::now();
    let cfg = BirkhoffConfig::default();
    let ev = two_measure_evidence(run, &cfg).unwrap();
    let control = golden_control(&cfg);
    let (fast, time) = within(t, Duration::from_secs(120));
    let pass = ev.gap > 10.0 * ev.spread && control.gap < control.spread && cfg.n == 100_000 && fast;
    outcome(
        pass,
        format!(
            "run gap {:.3e} vs spread {:.3e}; control gap {:.3e} vs spread {:.3e}; {time}",
            ev.gap, ev.spread, control.gap, control.spread
        ),
    )
}

fn criterion_11() -> Outcome {
    let halves = geometric_grid(0.5, 2f64.powi(-10), 0.5);
    let segment = box_dimension(&BoxSet::Intervals(vec![(0.0, 1.0)]), &halves).unwrap().estimate;
    let squares = geometric_grid(0.5, 2f64.powi(-8), 0.5);
    let square =
        box_dimension(&BoxSet::Polygons(vec![Polygon::rectangle(0.0, 0.0, 1.0, 1.0)]), &squares).unwrap().estimate;
    let thirds = geometric_grid(1.0 / 3.0, 3f64.powi(-10), 1.0 / 3.0);
    let cantor = box_dimension(&BoxSet::Intervals(cantor_intervals(10)), &thirds).unwrap().estimate;
    let (_, scan) = frostman_measure(&NestedFamily::cantor_product(6), &BallScanConfig::default()).unwrap();
    let c = 2f64.ln() / 3f64.ln();
    let pass = (segment - 1.0).abs() <= 0.02
        && (square - 2.0).abs() <= 0.02
        && (cantor - c).abs() <= 0.02
        && (scan.exponent - 2.0 * c).abs() <= 0.05;
    outcome(
        pass,
        format!(
            "segment {segment:.4}, square {square:.4}, cantor {cantor:.4} (target {c:.4}), frostman {:.4} (target {:.4})",
            scan.exponent,
            2.0 * c
        ),
    )
}

fn criterion_12() -> Outcome {
    let mut rng = substream(12, 0);
    let u: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let v: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let bodies: Vec<Body> = (0..50).map(|_| random_simplex(&mut rng)).collect();
    let cfg = ConcavityConfig { samples: 20_000, c_bound: 10.0, max_probes: 400, seed: 12 };
    let mut worst: f64 = 0.0;
    let mut within_bound = true;
    let mut ball_ok = true;
    let mut ball = Vec::new();
    for eps in [1e-2, 1e-4] {
        for b in &bodies {
            let r = concavity_test(b, &u, &v, eps, &cfg).unwrap();
            worst = worst.max(r.fraction / eps.sqrt());
            within_bound &= r.within_bound;
        }
        let r = concavity_test(&Body::Ball { center: [0.0; 4], radius: 1.0 }, &u, &v, eps, &cfg).unwrap();
        // offsets are uniform on a disk of radius 1; area below eps * pi
        // means squared offset above 1 - eps
        let p = 1.0 - (1.0 - eps);
        let se = (p * (1.0 - p) / cfg.samples as f64).sqrt();
        ball_ok &= (r.fraction - p).abs() <= 3.0 * se && (ball_section_fraction(eps) - p).abs() < 1e-15;
        ball.push(format!("{:.2e} vs {p:.0e}", r.fraction));
    }
    outcome(
        within_bound && ball_ok,
        format!("max fraction/sqrt(eps) {worst:.3} (C = 10), ball {}", ball.join(", ")),
    )
}

fn criterion_13() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    let eps0 = 0.1;
    let reps = (4.0 / eps0 as f64).ceil() as usize;
    for d in [4usize, 5, 6] {
        let ctx = PhaseContext::new(d).unwrap();
        let first = avoiding_path(&ctx, 1, reps).unwrap();
        let m = first.path.matrix.as_matrix();
        let half = (0..d - 2).all(|j| m.get(0, j) * BigInt::from(2) >= m.column_sum(j));
        pass &= half && face_first_coordinate_at_least_half(&first);
        let mut worst: f64 = 0.0;
        for i in 2..=d - 2 {
            let p = avoiding_path(&ctx, i, reps).unwrap();
            let m = p.path.matrix.as_matrix();
            for j in 0..d - 2 {
                let s = iet_core::matrix::big_to_f64(&m.column_sum(j));
                let dist = (0..d)
                    .map(|r| {
                        let x = iet_core::matrix::big_to_f64(m.get(r, j)) / s;
                        if r + 1 == i { (x - 1.0).powi(2) } else { x * x }
                    })
                    .sum::<f64>()
                    .sqrt();
                worst = worst.max(dist);
            }
        }
        pass &= worst <= eps0;
        details.push(format!("d={d}: i=1 half {half}, i>=2 radius {worst:.4}"));
    }
    outcome(pass, format!("{} (eps0 {eps0}, {reps} repetitions)", details.join("; ")))
}

fn run_cli(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_iet")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn criterion_14() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let commands: [&[&str]; 4] = [
        &["construct", "--d", "4", "--stages", "3", "--seed", "1"],
        &["classes", "--d", "5"],
        &["induct", "--lengths", "5/13,3/13,4/13,1/13", "--perm", "s4", "--until", "balanced:4"],
        &["verify", "probdecay", "--samples", "20000", "--seed", "3"],
    ];
    let mut identical = 0;
    let mut ok = true;
    for (i, args) in commands.iter().enumerate() {
        let a = dir.path().join(format!("{i}a"));
        let b = dir.path().join(format!("{i}b"));
        let ra = run_cli(args, &a);
        let rb = run_cli(args, &b);
        // a verdict may be violated; determinism only asks for the same outcome
        ok &= ra.status.code() == rb.status.code() && ra.status.code().is_some_and(|c| c == 0 || c == 5);
        ok &= ra.stdout == rb.stdout;
        let same = std::fs::read_dir(&a).unwrap().all(|e| {
            let name = e.unwrap().file_name();
            std::fs::read(a.join(&name)).unwrap() == std::fs::read(b.join(&name)).unwrap()
        });
        identical += usize::from(same);
    }
    outcome(ok && identical == commands.len(), format!("{identical}/{} commands byte-identical across two runs", commands.len()))
}

fn main() {
    let t = Instant::now();
    let run = reference_run();
    let run_time = t.elapsed();
    let results: Vec<(usize, Outcome)> = vec![
        (1, criterion_1()),
        (2, criterion_2()),
        (3, criterion_3()),
        (4, criterion_4()),
        (5, criterion_5()),
        (6, criterion_6()),
        (7, criterion_7()),
        (8, criterion_8()),
        (9, criterion_9(&run, run_time)),
        (10, criterion_10(&run)),
        (11, criterion_11()),
        (12, criterion_12()),
        (13, criterion_13()),
        (14, criterion_14()),
    ];
    let mut failed = Vec::new();
    for (n, o) in &results {
        println!("criterion {n}: {} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.push(*n);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
