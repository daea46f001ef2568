//! Acceptance criteria. Runs every check, prints one PASS/FAIL line per
//! criterion and exits non-zero if any fails.

use std::process::Command;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use symcdg::experiments::{self, SequenceKind};
use symcdg::fourier::{
    alternation_census, binary_window, conditional_dft_product, in_band, shifted_exponents,
    windows_distinct,
};
use symcdg::process::monte_carlo_check;
use symcdg::walk::{max_law, returns_law};
use symcdg::{
    conditional_evolve, evolve_exact, mixture_reconstruct, Modulus, MultiplierSequence,
    ProcessParams,
};

type Check = Result<String, String>;

fn md(p: u64) -> Modulus {
    Modulus::new(p).unwrap()
}

fn sym(p: u64) -> ProcessParams {
    ProcessParams::symmetric(md(p))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Law of X_n by walking all 6^n choices of (a_t, b_t), as integer counts.
fn enumerate_counts(p: u64, n: u32) -> Vec<u64> {
    let inv2 = (p + 1) / 2;
    let mut counts = vec![0u64; p as usize];
    for code in 0..6u64.pow(n) {
        let mut c = code;
        let mut x = 0u64;
        for _ in 0..n {
            let a = if c % 2 == 0 { 2 } else { inv2 };
            c /= 2;
            let b = (c % 3) as i64 - 1;
            c /= 3;
            x = ((a * x) as i64 + b).rem_euclid(p as i64) as u64;
        }
        counts[x as usize] += 1;
    }
    counts
}

fn c1_exactness() -> Check {
    let mut worst = 0.0f64;
    for p in [3u64, 5, 7] {
        for n in 0..=5u32 {
            let counts = enumerate_counts(p, n);
            let total = 6f64.powi(n as i32);
            let law = evolve_exact(&sym(p), n as u64).distribution;
            for (s, &c) in counts.iter().enumerate() {
                let err = (law.get(s as u64) - c as f64 / total).abs();
                worst = worst.max(err);
                ensure(err <= 1e-13, || format!("p={p} n={n} s={s} err={err:e}"))?;
            }
        }
    }
    let p2 = evolve_exact(&sym(5), 2).distribution;
    let expect = [1.0 / 9.0, 2.0 / 9.0, 2.0 / 9.0, 2.0 / 9.0, 2.0 / 9.0];
    for (s, e) in expect.iter().enumerate() {
        ensure((p2.get(s as u64) - e).abs() <= 1e-13, || format!("P_2 at p=5, s={s}"))?;
    }
    Ok(format!("max atom error {worst:.1e}"))
}

fn c2_p3() -> Check {
    let tv = evolve_exact(&sym(3), 1).curve.tv_at(1).unwrap();
    ensure(tv == 0.0, || format!("TV(P_1) = {tv:e}"))?;
    Ok("TV(P_1) = 0".into())
}

fn c3_upper_bound_lemma() -> Check {
    let mut min_slack = f64::INFINITY;
    for p in [101u64, 257, 1009] {
        let mut ev = symcdg::process::Evolver::new(&sym(p));
        for n in 0..=400u64 {
            if n > 0 {
                ev.step();
            }
            let d = ev.distribution();
            let tv = d.tv_distance();
            let bound = d.ub_lemma_bound();
            ensure(tv * tv <= bound + 1e-12, || {
                format!("p={p} n={n}: TV²={:e} > bound={bound:e}", tv * tv)
            })?;
            min_slack = min_slack.min(bound - tv * tv);
        }
    }
    Ok(format!("min slack {min_slack:.2e}"))
}

fn c4_mixture() -> Check {
    let mut worst = 0.0f64;
    for p in [5u64, 17, 31] {
        for n in 2..=6u64 {
            let mix = mixture_reconstruct(&sym(p), n).map_err(|e| e.to_string())?;
            let direct = evolve_exact(&sym(p), n).distribution;
            let max_atom = mix
                .mass()
                .iter()
                .zip(direct.mass())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            worst = worst.max(max_atom);
            ensure(max_atom <= 1e-10, || format!("p={p} n={n} err={max_atom:e}"))?;
        }
    }
    Ok(format!("max atom error {worst:.1e}"))
}

fn c5_product_formula() -> Check {
    let mut worst = 0.0f64;
    let mut checked = 0;
    for p in [17u64, 101, 257] {
        let m = md(p);
        for seed in 0..20u64 {
            let n = 2 + (seed * 7919 + p) % 59; // 2..=60
            let seq = MultiplierSequence::random((n - 1) as usize, 0.5, seed);
            let law = conditional_evolve(&sym(p), &seq);
            let exps = shifted_exponents(&seq);
            let shift = m.pow(2, n);
            for k in 1..p {
                let prod = conditional_dft_product(&exps, k, m).unwrap();
                let z = law.dft(m.mul(k, shift)).unwrap().value;
                let err = (z.re - prod).abs().max(z.im.abs());
                worst = worst.max(err);
                ensure(err <= 1e-10, || format!("p={p} seed={seed} k={k} err={err:e}"))?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} frequencies, max error {worst:.1e}"))
}

fn c6_feller() -> Check {
    for j in 0..=16u64 {
        let mut max_counts = vec![0u64; j as usize + 1];
        let mut ret_counts = vec![0u64; j as usize / 2 + 1];
        for bits in 0..1u64 << j {
            let (mut w, mut max, mut returns) = (0i64, 0i64, 0usize);
            for t in 0..j {
                w += if bits >> t & 1 == 1 { 1 } else { -1 };
                max = max.max(w);
                returns += (w == 0) as usize;
            }
            max_counts[max as usize] += 1;
            ret_counts[returns] += 1;
        }
        let denom = BigInt::from(1u64 << j);
        for (level, &c) in max_counts.iter().enumerate() {
            let expect = BigRational::new(BigInt::from(c), denom.clone());
            ensure(max_law(j, level as i64) == expect, || {
                format!("max law j={j} level={level}")
            })?;
        }
        if j % 2 == 0 {
            for (r, &c) in ret_counts.iter().enumerate() {
                let expect = BigRational::new(BigInt::from(c), denom.clone());
                ensure(returns_law(r as u64, j).unwrap() == expect, || {
                    format!("returns law 2n={j} r={r}")
                })?;
            }
        }
    }
    for two_n in (0..=1000u64).step_by(2) {
        let row: Vec<BigRational> = (0..=two_n / 2 + 1)
            .map(|r| returns_law(r, two_n).unwrap())
            .collect();
        for r in 0..row.len() - 1 {
            ensure(row[r + 1] <= row[r], || format!("z_(r+1) > z_r at 2n={two_n} r={r}"))?;
        }
    }
    let z0 = returns_law(0, 1000).unwrap().to_f64().unwrap();
    let scaled = z0 * (std::f64::consts::PI * 500.0).sqrt();
    ensure((0.999..=1.001).contains(&scaled), || format!("z_0,1000·√(500π) = {scaled}"))?;
    Ok(format!("z_0,1000·√(500π) = {scaled:.6}"))
}

fn c7_alternations() -> Check {
    let mut band_checks = 0u64;
    for p in (3..=1009u64).step_by(2) {
        let m = md(p);
        let top = 2 * m.log2().ceil() as u64;
        for f in 1..p {
            let w = binary_window(f, m, 0, top as usize + 2).unwrap();
            for l in 0..=top {
                let alt = w.digits[l as usize] != w.digits[l as usize + 1];
                ensure(alt == in_band(m, f, l), || format!("p={p} m={f} l={l}"))?;
                band_checks += 1;
            }
        }
    }
    for p in (3..=4099u64).step_by(2) {
        let m = md(p);
        let len = m.log2().ceil() as usize;
        for start in [0u64, 5] {
            ensure(windows_distinct(m, start, len).unwrap(), || {
                format!("windows collide for p={p} start={start}")
            })?;
        }
    }
    let mut tightest = 0.0f64;
    for p in [101u64, 1009, 10007] {
        let m = md(p);
        let len = m.log2().ceil() as usize + 2;
        for beta in [1.0, 5.0, 10.0] {
            let c = alternation_census(m, 0, len, 1.0 / 9.0, beta).map_err(|e| e.to_string())?;
            ensure(c.weighted_sum <= c.majorant, || format!("census p={p} beta={beta}"))?;
            tightest = tightest.max(c.weighted_sum / c.majorant);
        }
    }
    Ok(format!(
        "{band_checks} band checks; largest sum/majorant {tightest:.3}"
    ))
}

fn c8_scaling() -> Check {
    let grid = [101u64, 401, 1009, 4001, 10007];
    let sym_rows = experiments::scaling_experiment(&grid, 0.25, |m| Ok(ProcessParams::symmetric(m)))
        .map_err(|e| e.to_string())?;
    let fixed_rows =
        experiments::scaling_experiment(&grid, 0.25, |m| Ok(ProcessParams::fixed_doubling(m)))
            .map_err(|e| e.to_string())?;
    let sq: Vec<f64> = sym_rows.iter().map(|r| r.ratio_sq).collect();
    let band = sq.iter().cloned().fold(0.0, f64::max) / sq.iter().cloned().fold(f64::MAX, f64::min);
    ensure(band <= 3.0, || format!("(a) ratio_sq band {band:.3} > 3"))?;
    ensure(
        sym_rows.windows(2).all(|w| w[1].ratio_loglog > w[0].ratio_loglog),
        || format!("(b) ratio_loglog not increasing: {sym_rows:?}"),
    )?;
    ensure(
        fixed_rows.windows(2).all(|w| w[1].ratio_sq < w[0].ratio_sq),
        || format!("(c) fixed ratio_sq not decreasing: {fixed_rows:?}"),
    )?;
    let ns: Vec<u64> = sym_rows.iter().map(|r| r.n_star).collect();
    Ok(format!("n* = {ns:?}, ratio_sq band {band:.3}"))
}

fn c9_lower_bound() -> Check {
    let m = md(10007);
    let params = sym(10007);
    let (n, shift, w) = experiments::lower_bound_defaults(m);
    let lb = experiments::lower_bound_check(&params, n, shift, w).map_err(|e| e.to_string())?;
    ensure(lb.exact_tv > 0.9, || format!("exact TV {} at n={n}", lb.exact_tv))?;
    for n in 0..=40u64 {
        for shift in [-6i64, 0, 2, 4, 8] {
            for w in [0u64, 50, 884, 2500] {
                let r = experiments::lower_bound_check(&params, n, shift, w)
                    .map_err(|e| e.to_string())?;
                ensure(r.tv_lower_bound <= r.exact_tv + 1e-12, || format!("{r:?}"))?;
            }
        }
    }
    Ok(format!(
        "n={n} s={shift} W={w}: exact TV {:.4}, interval bound {:.4}",
        lb.exact_tv, lb.tv_lower_bound
    ))
}

fn c10_alternating() -> Check {
    let r = experiments::conditional_experiment(&sym(10007), 100, SequenceKind::Alternating, 10.0)
        .map_err(|e| e.to_string())?;
    let floor = 1.0 - 303.0 / 10007.0;
    ensure(r.tv >= floor, || format!("TV {} < {floor}", r.tv))?;
    Ok(format!("TV {:.5} ≥ {floor:.5}", r.tv))
}

fn c11_monte_carlo() -> Check {
    let r = monte_carlo_check(&sym(101), 10_000, 1_000_000, 20240915).map_err(|e| e.to_string())?;
    let bound = 3.0 * (101.0f64 / (4.0 * 1e6)).sqrt();
    ensure(r.sampling_tv <= bound, || format!("{r:?}"))?;
    Ok(format!("empirical-vs-exact TV {:.5} ≤ {bound:.5}", r.sampling_tv))
}

fn run_cli(args: &[&str], threads: &str) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_symcdg"))
        .args(args)
        .args(["--threads", threads])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr))
    })?;
    Ok(out.stdout)
}

fn c12_determinism() -> Check {
    let commands: [&[&str]; 5] = [
        &["conditional", "--p", "1009", "--n", "120", "--seed", "7", "--seeds", "12"],
        &["census", "--p", "1009", "--seed", "3"],
        &["walk-laws", "--j", "20", "--samples", "20000", "--seed", "5"],
        &["sample", "--p", "101", "--n", "500", "--samples", "50000", "--seed", "9"],
        &["scaling", "--p-grid", "101,401,1009"],
    ];
    for args in commands {
        let one = run_cli(args, "1")?;
        let eight = run_cli(args, "8")?;
        ensure(!one.is_empty() && one == eight, || format!("{args:?} differs across thread counts"))?;
    }
    Ok(format!("{} seeded commands byte-identical", commands.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 12] = [
        ("1 exact evolution vs 6^n enumeration", c1_exactness),
        ("2 p=3 mixes in one step", c2_p3),
        ("3 upper bound lemma along curves", c3_upper_bound_lemma),
        ("4 mixture of conditionals", c4_mixture),
        ("5 conditional product formula", c5_product_formula),
        ("6 exact walk laws", c6_feller),
        ("7 alternation machinery", c7_alternations),
        ("8 (log p)^2 scaling", c8_scaling),
        ("9 interval lower bound", c9_lower_bound),
        ("10 alternating-sequence concentration", c10_alternating),
        ("11 Monte Carlo consistency", c11_monte_carlo),
        ("12 thread-count determinism", c12_determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let t = Instant::now();
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail} ({:.1?})", t.elapsed()),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} ({:.1?})", t.elapsed());
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all {} acceptance criteria passed", criteria.len());
}
