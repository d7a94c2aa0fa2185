//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spanlab::bounds::theorem_bound;
use spanlab::certify::{
    certify, certify_with, verify_chain, verify_witness, CertificateChain, CertifyOptions, RankOneEvidence,
    RankOneReport, StepOutput, Witness,
};
use spanlab::gen::{generate, search_nonmonotone, shift_and_kill, strict_upper, trial_seed, Family, InstanceSpec};
use spanlab::index::{dim_sequence, is_primitive, scan_to_full, wielandt_index};
use spanlab::io::bench_row;
use spanlab::matspace::{Complex64, Field, GaussRational as Q, Matrix, MatrixSpace};
use spanlab::oracle::{brute_force_dim, OracleBudget};

const SEED: u64 = 0x5EED_2024;
const SAMPLE_TOL: f64 = 1e-8;

type Verdict = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn span(g: &[Matrix<Q>]) -> MatrixSpace<Q> {
    MatrixSpace::canonical_basis(g).expect("nonzero generators")
}

/// `⌈log₂ D⌉ + 1` by repeated doubling.
fn chain_cap(d: usize) -> usize {
    let mut c = 0;
    let mut p = 1;
    while p < d {
        p *= 2;
        c += 1;
    }
    c + 1
}

/// Generator lists with entries in `{−2..2}`, not all zero.
fn small_instance(rng: &mut ChaCha8Rng, d: usize, n: usize) -> Vec<Matrix<Q>> {
    loop {
        let g: Vec<Matrix<Q>> = (0..n)
            .map(|_| Matrix::from_fn(d, d, |_, _| Q::from_i64(rng.gen_range(-2..=2))))
            .collect();
        if g.iter().any(|m| !m.is_zero()) {
            return g;
        }
    }
}

/// `H = Σ E_{a_i b_i}` with all `a_i, b_i` distinct, so `H² = 0`, plus a
/// few off-diagonal unit matrices. Every letter is nilpotent, so with
/// letters-only seeding these spaces go through the halving steps.
fn unit_instance(rng: &mut ChaCha8Rng, d: usize) -> Vec<Matrix<Q>> {
    let mut idx: Vec<usize> = (0..d).collect();
    idx.shuffle(rng);
    let r = rng.gen_range(1..=d / 2);
    let mut h = Matrix::zeros(d, d);
    for i in 0..r {
        h.set(idx[2 * i], idx[2 * i + 1], Q::one());
    }
    let mut g = vec![h];
    for _ in 0..rng.gen_range(2..=d + 1) {
        let i = rng.gen_range(0..d);
        let j = (i + rng.gen_range(1..d)) % d;
        g.push(Matrix::unit(d, i, j));
    }
    g
}

// ---------------------------------------------------------------------------
// Per-chain bookkeeping shared by the certificate criteria.

#[derive(Default)]
struct ChainStats {
    runs: usize,
    probes: usize,
    max_probe_ratio: f64,
    steps: usize,
    probe_rank: Vec<String>,
    halving: Vec<String>,
}

impl ChainStats {
    fn record<F: Field>(&mut self, label: &str, chain: &CertificateChain<F>) {
        self.runs += 1;
        let d = chain.d;
        for (i, s) in chain.steps.iter().enumerate() {
            self.probes += 1;
            let p = &s.probe;
            // Recompute the block from the word instead of trusting the
            // stored one.
            let Some(a) = p.word.eval(&chain.generators) else {
                self.probe_rank.push(format!("{label} step {i}: word out of range"));
                continue;
            };
            let block = p.p.mul(&a).mul(&p.q);
            let r = block.rank();
            self.max_probe_ratio = self.max_probe_ratio.max((r * p.k) as f64 / d as f64);
            if r == 0 || r != p.block_rank || r * p.k > d || p.word.len() != p.k {
                self.probe_rank.push(format!(
                    "{label} step {i}: rank {r} (stored {}) at k = {} with D = {d}",
                    p.block_rank, p.k
                ));
            }
        }
        self.steps += chain.steps.len();
        let ranks = chain.square_zero_ranks();
        let cap = chain_cap(d);
        if ranks.windows(2).any(|w| 2 * w[1] > w[0]) || ranks.len() > cap || chain.steps.len() > cap {
            self.halving.push(format!("{label}: ranks {ranks:?}, {} steps, cap {cap}", chain.steps.len()));
        }
    }
}

// ---------------------------------------------------------------------------

struct Suite {
    /// Instances with `D ≤ 4` used by the single-check and bound criteria.
    small: Vec<(String, Vec<Matrix<Q>>)>,
    chains: ChainStats,
}

fn c1_oracle(suite: &mut Suite) -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let budget = OracleBudget::default();
    let mut checks = 0;
    for t in 0..240 {
        let d = 1 + t % 4;
        let n = 1 + (t / 4) % 3;
        let g = small_instance(&mut rng, d, n);
        let l = span(&g);
        for k in 1..=6 {
            let engine = l.power(k).dim();
            let brute = brute_force_dim(&g, k, &budget).map_err(|e| e.to_string())?;
            ensure(engine == brute, || format!("instance {t}, k = {k}: engine {engine}, brute force {brute}"))?;
            checks += 1;
        }
        suite.small.push((format!("c1#{t}"), g));
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:.1?}"))?;
    Ok(format!("240 instances, {checks} (instance, k) pairs, 100% match in {elapsed:.1?}"))
}

fn c2_single_check(suite: &mut Suite) -> Verdict {
    for d in 2..=4 {
        suite.small.push((format!("shift_and_kill({d})"), shift_and_kill(d)));
        suite.small.push((format!("strict_upper({d})"), strict_upper(d)));
    }
    for t in 0..60u64 {
        let family = [Family::RandomSparse, Family::RandomDense, Family::NilpotentGenerators][t as usize % 3];
        let d = 2 + (t as usize / 3) % 3;
        let spec = InstanceSpec::new(family, d, 2 + (t as usize % 2), trial_seed(SEED, t));
        suite.small.push((format!("{family}#{t}"), generate(&spec).map_err(|e| e.to_string())?));
    }
    let (mut primitive, mut not) = (0, 0);
    for (name, g) in &suite.small {
        let l = span(g);
        let k = theorem_bound(l.d()) as usize;
        let scanned = scan_to_full(&l, k);
        let single = l.power(k).is_full();
        ensure(scanned.is_some() == single, || format!("{name}: scan {scanned:?}, single check {single}"))?;
        if let Some(i) = scanned {
            ensure(l.power(i).is_full() && (i == 1 || !l.power(i - 1).is_full()), || format!("{name}: index {i}"))?;
            primitive += 1;
        } else {
            not += 1;
        }
    }
    Ok(format!("{} instances ({primitive} primitive, {not} not), zero discrepancies", suite.small.len()))
}

fn c3_bounds(suite: &mut Suite) -> Verdict {
    let (mut checked, mut paz_total, mut paz_ok) = (0, 0, 0);
    let mut paz_exceed = Vec::new();
    for (name, g) in &suite.small {
        let l = span(g);
        let Some(index) = wielandt_index(&l) else { continue };
        let chain = certify(&l).map_err(|e| format!("{name}: {e}"))?;
        verify_chain(&l, &chain).map_err(|e| format!("{name}: {e}"))?;
        suite.chains.record(name, &chain);
        let claimed = chain.claimed_index_bound.ok_or_else(|| format!("{name}: no claimed bound"))?;
        let k = theorem_bound(l.d());
        ensure(index <= claimed && claimed as u64 <= k, || format!("{name}: {index} ≤ {claimed} ≤ {k} fails"))?;
        checked += 1;
        if l.d() == 1 {
            continue;
        }
        paz_total += 1;
        if index <= 2 * l.d() - 2 {
            paz_ok += 1;
        } else {
            paz_exceed.push(format!("{name} (D = {}, index {index})", l.d()));
        }
    }
    ensure(checked > 0, || "no primitive instances".into())?;
    let mut msg = format!("{checked} primitive instances satisfy index ≤ claimed ≤ K; telemetry: index ≤ 2D−2 on {paz_ok}/{paz_total} with D ≥ 2");
    if !paz_exceed.is_empty() {
        msg += &format!(", exceeded by {}", paz_exceed.join(", "));
    }
    Ok(msg)
}

fn check_report<F: Field>(r: &RankOneReport<F>, d: usize, label: &str) -> Result<(), String> {
    let m = &r.m_dims;
    ensure(m.len() <= d && m.last() == Some(&d), || format!("{label}: m_dims {m:?} do not reach {d}"))?;
    let sd = r.s * d;
    let t = &r.tilde_dims;
    ensure(t.len() <= sd && t.last() == Some(&sd), || format!("{label}: tilde_dims {t:?} do not reach {sd}"))?;
    ensure(r.projected_full_at <= sd, || format!("{label}: projected_full_at {}", r.projected_full_at))?;
    ensure(!r.samples.is_empty(), || format!("{label}: no samples"))?;
    for (i, s) in r.samples.iter().enumerate() {
        let mat = &s.element.matrix;
        ensure(mat.rank() == 1, || format!("{label}: sample {i} has rank {}", mat.rank()))?;
        let image = mat.mul_vec(&s.v1);
        if F::BACKEND == spanlab::matspace::Backend::Exact {
            ensure(image == s.v2, || format!("{label}: sample {i} maps v1 elsewhere"))?;
        } else {
            let scale = mat.max_magnitude() * s.v1.iter().map(Field::magnitude).fold(0.0, f64::max) * d as f64;
            let err = image.iter().zip(&s.v2).map(|(a, b)| a.minus(b).magnitude()).fold(0.0, f64::max);
            ensure(err <= SAMPLE_TOL * scale.max(1.0), || format!("{label}: sample {i} residual {err:e}"))?;
        }
    }
    Ok(())
}

fn certify_and_check<F: Field>(
    l: &MatrixSpace<F>,
    opts: &CertifyOptions,
    label: &str,
    stats: &mut ChainStats,
) -> Result<(), String> {
    let chain = certify_with(l, opts).map_err(|e| format!("{label}: {e}"))?;
    ensure(chain.is_primitive(), || format!("{label}: primitive space certified imprimitive"))?;
    verify_chain(l, &chain).map_err(|e| format!("{label}: {e}"))?;
    if let Some(w) = &chain.seed {
        verify_witness(l, Witness::SquareZero(w)).map_err(|e| format!("{label}: seed {e}"))?;
    }
    for s in &chain.steps {
        match &s.output {
            StepOutput::SquareZero(w) => verify_witness(l, Witness::SquareZero(w)),
            StepOutput::NonNilpotent(w) => verify_witness(l, Witness::NonNilpotent(w)),
        }
        .map_err(|e| format!("{label}: step {e}"))?;
    }
    let fin = chain.final_witness.as_ref().ok_or_else(|| format!("{label}: no final witness"))?;
    verify_witness(l, Witness::NonNilpotent(fin)).map_err(|e| format!("{label}: final {e}"))?;
    match chain.rank_one.as_ref().ok_or_else(|| format!("{label}: no rank-one report"))? {
        RankOneEvidence::Native(r) => check_report(r, l.d(), label)?,
        RankOneEvidence::Float(r) => check_report(r, l.d(), label)?,
    }
    stats.record(label, &chain);
    Ok(())
}

fn c4_soundness(suite: &mut Suite) -> Verdict {
    let letters_only = CertifyOptions { seed_trials: 0, ..CertifyOptions::default() };
    let default = CertifyOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 4);
    let (mut runs, mut float_runs, mut attempts) = (0, 0, 0);
    while runs < 1000 {
        attempts += 1;
        ensure(attempts < 50_000, || format!("only {runs} primitive instances found"))?;
        let d = rng.gen_range(2..=5);
        let kind = runs % 5;
        let n = rng.gen_range(2..=3);
        let g = match kind {
            0 => unit_instance(&mut rng, d),
            1 => generate(&InstanceSpec::new(Family::RandomSparse, d, n, rng.gen()))
                .map_err(|e| e.to_string())?,
            2 => generate(&InstanceSpec::new(Family::NilpotentGenerators, d, n, rng.gen()))
                .map_err(|e| e.to_string())?,
            _ => small_instance(&mut rng, d, n),
        };
        let l = span(&g);
        if !is_primitive(&l) {
            continue;
        }
        let label = format!("run {runs} (D = {d}, kind {kind})");
        let opts = if kind == 0 { &letters_only } else { &default };
        if kind == 4 && runs % 2 == 0 {
            let lf: MatrixSpace<Complex64> = l.map(Field::to_c64);
            certify_and_check(&lf, opts, &label, &mut suite.chains)?;
            float_runs += 1;
        } else {
            certify_and_check(&l, opts, &label, &mut suite.chains)?;
        }
        runs += 1;
    }
    Ok(format!("{runs} runs ({float_runs} float) verified, {} halving steps", suite.chains.steps))
}

fn c5_probe_rank(suite: &mut Suite) -> Verdict {
    let c = &suite.chains;
    ensure(c.probes > 0, || "no probe invocations".into())?;
    ensure(c.probe_rank.is_empty(), || format!("{} violations, first: {}", c.probe_rank.len(), c.probe_rank[0]))?;
    Ok(format!(
        "{} probes over {} certify runs, max rank·k/D = {:.2}",
        c.probes, c.runs, c.max_probe_ratio
    ))
}

fn c6_nilpotency() -> Verdict {
    for d in 2..=6 {
        let l = span(&strict_upper(d));
        ensure(l.power(d).is_zero() && !l.power(d - 1).is_zero(), || format!("strict_upper({d})"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 6);
    let mut nilpotent = 0;
    for t in 0..500 {
        let d = rng.gen_range(2..=5);
        let spec = match t % 3 {
            0 => InstanceSpec::new(Family::NilpotentGenerators, d, 1, rng.gen()),
            1 => InstanceSpec::new(Family::NilpotentGenerators, d, 2, rng.gen()),
            _ => InstanceSpec::new(Family::RandomSparse, d, rng.gen_range(1..=2), rng.gen()),
        };
        let l = span(&generate(&spec).map_err(|e| e.to_string())?);
        let mut power = l.clone();
        let mut scan = power.is_zero();
        for _ in 2..=2 * d {
            power = power.product(&l).expect("same dimension");
            scan |= power.is_zero();
        }
        let single = l.power(d).is_zero();
        ensure(scan == single, || format!("instance {t}: scan {scan}, single check {single}"))?;
        nilpotent += usize::from(single);
    }
    Ok(format!("strict_upper(2..6) exact; 500 random instances agree ({nilpotent} nilpotent)"))
}

fn c7_halving(suite: &mut Suite) -> Verdict {
    let c = &suite.chains;
    ensure(c.halving.is_empty(), || format!("{} violations, first: {}", c.halving.len(), c.halving[0]))?;
    Ok(format!("{} chains, {} steps, all ranks halve within ⌈log₂ D⌉+1", c.runs, c.steps))
}

fn c8_nonmonotone() -> Verdict {
    let l = span(&strict_upper(3));
    let seq = dim_sequence(&l, 3);
    let dims: Vec<usize> = seq.dims.iter().map(|&(_, d)| d).collect();
    ensure(dims == [3, 1, 0], || format!("strict_upper(3) dims {dims:?}"))?;
    ensure(seq.first_drop() == Some(1), || format!("first drop {:?}", seq.first_drop()))?;
    let hits = search_nonmonotone(4, 200, SEED);
    for (h, j) in &hits {
        ensure(h.power(j + 1).dim() < h.power(*j).dim(), || format!("search hit at j = {j} does not drop"))?;
    }
    Ok(format!("strict_upper(3) dims 3,1,0; {} further drops found at D = 4", hits.len()))
}

fn c9_bench() -> Verdict {
    let expected = [12u64, 56, 136, 256, 416, 618];
    for (i, &k) in expected.iter().enumerate() {
        let d = (i + 1) as f64;
        let float = (2.0 * d * d * (6.0 + d.log2())).floor() as u64;
        ensure(float == k, || format!("reference value for D = {} is off", i + 1))?;
    }
    let start = Instant::now();
    let mut cols = Vec::new();
    for d in 2..=6 {
        let row = bench_row(d);
        ensure(row.bound == expected[d - 1], || format!("D = {d}: bound {} ≠ {}", row.bound, expected[d - 1]))?;
        cols.push(format!("{d}:{}ms", row.millis));
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(600), || format!("took {elapsed:.1?}"))?;
    Ok(format!("D = 2..6 in {elapsed:.1?} ({}), K column matches", cols.join(" ")))
}

fn main() {
    let mut suite = Suite { small: Vec::new(), chains: ChainStats::default() };
    type Criterion = (&'static str, fn(&mut Suite) -> Verdict);
    let criteria: [Criterion; 9] = [
        ("1 oracle equivalence", c1_oracle),
        ("2 theorem single-check", c2_single_check),
        ("3 bound sanity", c3_bounds),
        ("4 certificate soundness", c4_soundness),
        ("5 reachability rank bound", c5_probe_rank),
        ("6 nilpotency at L^D", |_| c6_nilpotency()),
        ("7 rank-halving chain", c7_halving),
        ("8 non-monotone exhibit", |_| c8_nonmonotone()),
        ("9 bench scaling", |_| c9_bench()),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(|| run(&mut suite)))
            .unwrap_or_else(|p| Err(format!("panicked: {}", panic_text(&p))));
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(msg) => println!("PASS  criterion {name} [{secs:.1}s]: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  criterion {name} [{secs:.1}s]: {msg}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} of 9 criteria failed");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}

fn panic_text(p: &Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_default()
}
