//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion with its
//! tolerance and runtime limit. Exits nonzero on failure only when
//! `DOPS_ACCEPTANCE_STRICT=1`; the known failure of criterion 6 is explained in
//! the README.

use std::time::{Duration, Instant};

use dops_core::classical::monic_meixner_sequence;
use dops_core::exactnum::{factorial_q, float_to_string, pochhammer_q, pow_rational};
use dops_core::genseries::extract_coefficients;
use dops_core::recurrence::{apply_lowering, build_monic_sequence};
use dops_core::su11::{build_rep, build_s, coherent_eigen_deviation, extract_phat, verify_identities};
use dops_core::weights::{
    biorthogonality, functional_apply, phi_series, verify_d_orthogonality, weight_r1_rational, weight_w, EntryStatus,
    Requirement,
};
use dops_core::{Float, KPolicy, MeixnerParams, Poly, Rational};
use rug::ops::Pow;

const BETAS: [(i64, i64); 3] = [(1, 1), (3, 2), (5, 2)];
const CS: [(i64, i64); 2] = [(1, 4), (1, 2)];
const PREC: u32 = 256;

fn grid(rs: &[usize]) -> Vec<MeixnerParams> {
    let mut out = Vec::new();
    for &r in rs {
        for beta in BETAS {
            for c in CS {
                out.push(MeixnerParams::from_ratios(r, beta, c).unwrap());
            }
        }
    }
    out
}

fn f(x: f64) -> Float {
    Float::with_val(PREC, x)
}

fn fmt(x: &Float) -> String {
    float_to_string(x, 3)
}

struct Outcome {
    ok: bool,
    summary: String,
}

fn exact(mismatches: usize, total: usize) -> Outcome {
    Outcome { ok: mismatches == 0 && total > 0, summary: format!("{mismatches} of {total} exact comparisons differ") }
}

fn criterion(id: u32, title: &str, limit_s: u64, body: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let out = body();
    let elapsed = t.elapsed();
    let in_time = elapsed <= Duration::from_secs(limit_s);
    let ok = out.ok && in_time;
    println!(
        "criterion {id:>2}: {} {title}: {}; runtime {:.2} s (limit {limit_s} s{})",
        if ok { "PASS" } else { "FAIL" },
        out.summary,
        elapsed.as_secs_f64(),
        if in_time { "" } else { ", exceeded" }
    );
    ok
}

fn c1() -> Outcome {
    let mut bad = 0;
    let mut total = 0;
    for p in grid(&[1]) {
        let ours = build_monic_sequence(&p.recurrence_data(), 20);
        let classical = monic_meixner_sequence(20, &p.beta, &p.c);
        for (a, b) in ours.entries.iter().zip(&classical) {
            total += 1;
            bad += usize::from(a != b);
        }
    }
    exact(bad, total)
}

fn c2() -> Outcome {
    let mut bad = 0;
    let mut total = 0;
    for p in grid(&[1, 2, 3]) {
        let rec = build_monic_sequence(&p.recurrence_data(), 15);
        let series = extract_coefficients(&p.structure(), &p.beta, 15);
        for n in 0..=15 {
            total += 1;
            bad += usize::from(rec.entries[n] != series.entries[n]);
        }
    }
    exact(bad, total)
}

fn c3() -> Outcome {
    let mut bad = 0;
    let mut total = 0;
    for p in grid(&[1, 2]) {
        let rep = build_rep(&p.beta, 14).unwrap();
        let me = build_s(&rep, &p.structure().poly()).unwrap();
        let seq = build_monic_sequence(&p.recurrence_data(), 12);
        for n in 0..=12 {
            for k in 0..=12usize {
                total += 1;
                bad += usize::from(extract_phat(&me, n, k).unwrap() != seq.entries[n].eval(&Rational::from(k as u64)));
            }
        }
    }
    exact(bad, total)
}

fn c4() -> Outcome {
    let mut bad = 0;
    let mut total = 0;
    for p in grid(&[1, 2, 3]) {
        let seq = build_monic_sequence(&p.recurrence_data(), 15);
        total += 1;
        bad += usize::from(!apply_lowering(&seq.entries[0], &p.beta).is_zero());
        for n in 1..=15u64 {
            let factor = Rational::from(n) * (Rational::from(n - 1) + &p.beta);
            total += 1;
            bad += usize::from(
                apply_lowering(&seq.entries[n as usize], &p.beta) != seq.entries[n as usize - 1].scale(&factor),
            );
        }
    }
    exact(bad, total)
}

fn c5() -> Outcome {
    let tol = f(1e-25);
    let mut bad_exact = 0;
    let mut worst_closed = f(0.0);
    let mut worst_orth = f(0.0);
    let mut k_used = 0;
    let policy = KPolicy { cap: 4096, tail_tol: 1e-30, tail_stretch: 8, prec: PREC };
    for p in grid(&[1]) {
        let lead = pow_rational(&Rational::from(1 - &p.c), &p.beta, PREC);
        for k in 0..=30usize {
            let ck = p.c.clone().pow(k as i32);
            bad_exact += usize::from(weight_r1_rational(k, &p).unwrap() != ck);
            let w = weight_w(0, k, &p, PREC).unwrap().value;
            let expect = Float::with_val(PREC, &lead * Float::with_val(PREC, &ck));
            let rel = Float::with_val(PREC, (w - &expect) / &expect).abs();
            worst_closed = worst_closed.max(&rel);
        }
        let seq = build_monic_sequence(&p.recurrence_data(), 8);
        for n in 1..=8 {
            for m in 0..n {
                let v = functional_apply(0, &(&seq.entries[m] * &seq.entries[n]), &p, &policy).unwrap();
                k_used = k_used.max(v.k_used);
                worst_orth = worst_orth.max(&Float::with_val(PREC, v.value.abs_ref()));
            }
        }
    }
    Outcome {
        ok: bad_exact == 0 && worst_closed < tol && worst_orth < tol,
        summary: format!(
            "c^k factor exact ({bad_exact} mismatches, k <= 30), max rel dev of w_0k from (1-c)^beta c^k {}, \
             max |sum_k w_k P̂_m P̂_n| {} (tol 1e-25, K <= {k_used})",
            fmt(&worst_closed),
            fmt(&worst_orth)
        ),
    }
}

fn d_orth(cap: usize) -> (bool, String) {
    let p = MeixnerParams::from_ratios(2, (3, 2), (1, 2)).unwrap();
    let policy = KPolicy { cap, tail_tol: 1e-28, tail_stretch: 8, prec: PREC };
    let rep = verify_d_orthogonality(&p, 9, 1e-25, &policy).unwrap();
    let zeros: Vec<_> = rep.entries.iter().filter(|e| e.requirement == Requirement::Zero).collect();
    let failed_zeros = zeros.iter().filter(|e| e.status != EntryStatus::Pass).count();
    let diag_fail =
        rep.entries.iter().filter(|e| e.requirement == Requirement::Nonzero && e.status == EntryStatus::Fail).count();
    (
        rep.pass,
        format!(
            "K <= {cap}: {failed_zeros} of {} required zeros not below 1e-25 ({} sums not stabilized), \
             max |zero entry| {}, {diag_fail} stabilized diagonal entries not above 1e-24, min |diagonal| {}",
            zeros.len(),
            rep.non_stabilized,
            rep.max_zero_abs,
            rep.min_diagonal_abs
        ),
    )
}

fn c6() -> Outcome {
    let (ok, summary) = d_orth(4096);
    Outcome { ok, summary }
}

fn c7() -> Outcome {
    let mut worst = f(0.0);
    let mut total = 0;
    for p in grid(&[1, 2, 3]) {
        for i in 0..p.d() {
            for k in 0..=20usize {
                let w = weight_w(i, k, &p, PREC).unwrap().value;
                let mass = Float::with_val(PREC, pochhammer_q(&p.beta, k as u64) / factorial_q(k as u64));
                let phi = phi_series(i, k, &p, PREC).unwrap().value;
                let scale = Float::with_val(PREC, phi.abs_ref()).max(&f(1.0));
                let dev = Float::with_val(PREC, (w * mass - &phi) / scale).abs();
                worst = worst.max(&dev);
                total += 1;
            }
        }
    }
    Outcome {
        ok: worst < f(1e-25),
        summary: format!("{total} entries, max |difference| / max(1, |phi|) {} (tol 1e-25)", fmt(&worst)),
    }
}

fn c8() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for r in [1, 2] {
        let p = MeixnerParams::from_ratios(r, (3, 2), (1, 2)).unwrap();
        let entries = biorthogonality(&p, 6, 1e-20, 64, 16384, PREC).unwrap();
        let bad = entries.iter().filter(|e| !(e.stabilized && e.pass)).count();
        let k = entries.iter().map(|e| e.k_used).max().unwrap_or(0);
        let worst = entries
            .iter()
            .filter_map(|e| e.deviations.last().map(|d| d.1.parse::<f64>().unwrap_or(f64::INFINITY)))
            .fold(0.0, f64::max);
        ok &= bad == 0;
        parts.push(format!("r={r}: {bad} of {} pairs off, max dev {worst:.2e}, K <= {k}", entries.len()));
    }
    Outcome { ok, summary: format!("beta=3/2 c=1/2, tol 1e-20; {}", parts.join("; ")) }
}

fn c9() -> Outcome {
    let mut failed = Vec::new();
    let mut total = 0;
    for beta in BETAS {
        let beta = Rational::from(beta);
        let rep = build_rep(&beta, 14).unwrap();
        for r in [1, 2, 3] {
            let q = MeixnerParams::new(r, beta.clone(), Rational::from((1, 2))).unwrap().structure().poly();
            for c in verify_identities(&rep, &q).unwrap().checks.into_iter().filter(|c| !c.diagnostic) {
                total += 1;
                if !c.pass {
                    failed.push(format!("{} (beta={beta}, r={r})", c.name));
                }
            }
        }
    }
    Outcome {
        ok: failed.is_empty(),
        summary: format!(
            "{} of {total} identity checks differ on interior blocks{}",
            failed.len(),
            if failed.is_empty() { String::new() } else { format!(": {}", failed.join(", ")) }
        ),
    }
}

fn c10() -> Outcome {
    let mut worst = f(0.0);
    for z in [0.25, 1.0] {
        for beta in [(1, 1), (3, 2)] {
            let dev = coherent_eigen_deviation(&f(z), &Rational::from(beta), 40, &Poly::x());
            worst = worst.max(&dev);
        }
    }
    Outcome { ok: worst < f(1e-30), summary: format!("max relative deviation {} (tol 1e-30), N = 40", fmt(&worst)) }
}

fn main() {
    let results = [
        criterion(1, "classical reduction, r = 1, n <= 20", 1, c1),
        criterion(2, "recurrence = generating series, n <= 15, r <= 3", 5, c2),
        criterion(3, "operator matrix elements = recurrence, n, k <= 12, N = 14", 10, c3),
        criterion(4, "lowering identity, n <= 15", 2, c4),
        criterion(5, "r = 1 closed form and orthogonality, m < n <= 8", 5, c5),
        criterion(6, "d-orthogonality, r = 2, beta = 3/2, c = 1/2, n <= 9", 60, c6),
        criterion(7, "weight path agreement, i < d, k <= 20, r <= 3", 30, c7),
        criterion(8, "biorthogonality, n, m <= 6, r in {1, 2}", 30, c8),
        criterion(9, "algebraic identities, N = 14", 10, c9),
        criterion(10, "coherent states, N = 40", 2, c10),
    ];
    let t = Instant::now();
    let (ok, summary) = d_orth(8192);
    println!(
        "note: criterion 6 rerun with K <= 8192: {}; {summary}; runtime {:.2} s",
        if ok { "would pass" } else { "still fails" },
        t.elapsed().as_secs_f64()
    );
    let passed = results.iter().filter(|&&ok| ok).count();
    println!("acceptance: {passed} of {} criteria pass", results.len());
    let strict = std::env::var("DOPS_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && passed != results.len() {
        std::process::exit(1);
    }
}
