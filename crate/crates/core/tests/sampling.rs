use flagbeta::closed_form::{main_rhs, ExponentSet};
use flagbeta::importance::{is_mc_estimate, proposal_for, ProposalRule};
use flagbeta::rng::{stream_base, stream_rng};
use flagbeta::sampler::{conditional_entry_sample, sample_flags, student_t_sample};
use flagbeta::stats::{energy_test, ks_test, RunningMoments};
use flagbeta::{FieldTag, MeasureSpec, Scalar, UnitriangularMatrix};
use num_complex::Complex64;
use statrs::function::beta::beta_reg;

/// `|w|^2 / (1 + |w|^2)` is Beta(kappa/2, nu - kappa/2) when `w ~ (1+|w|^2)^{-nu}`.
#[test]
fn order_two_radial_law_across_seeds() {
    for tag in FieldTag::ALL {
        let half = tag.kappa_f64() / 2.0;
        let lambda = half + 0.75;
        let spec = MeasureSpec::new(2, tag, vec![lambda]).unwrap();
        let failures = (0..20u64)
            .filter(|&seed| {
                let t: Vec<f64> = sample_flags(&spec, 5000, seed, 0)
                    .unwrap()
                    .iter()
                    .map(|s| {
                        let x = s.z.entry(1, 2).unwrap().abs2();
                        x / (1.0 + x)
                    })
                    .collect();
                ks_test(&t, |x| beta_reg(half, lambda - half, x.clamp(0.0, 1.0))).p_value < 0.01
            })
            .count();
        assert!(failures <= 2, "{tag}: {failures} of 20 seeds rejected");
    }
}

#[test]
fn student_t_examples() {
    let mut rng = stream_rng(1, 0);
    let n = 100_000;
    let draws: Vec<f64> = (0..n).map(|_| student_t_sample(1.0, FieldTag::Real, &mut rng).unwrap().re()).collect();
    let mut sorted = draws.clone();
    sorted.sort_by(f64::total_cmp);
    // median of a standard Cauchy; sd of the sample median is pi/(2 sqrt n)
    let median = sorted[n / 2];
    assert!(median.abs() < 4.0 * std::f64::consts::PI / (2.0 * (n as f64).sqrt()));

    let inside = (0..n).filter(|_| student_t_sample(2.0, FieldTag::Complex, &mut rng).unwrap().abs2() <= 1.0).count()
        as f64
        / n as f64;
    assert!((inside - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt());
}

#[test]
fn second_moment_switch() {
    // the second moment exists iff 2 nu - kappa > 2; kappa = 2 here
    let mut rng = stream_rng(2, 0);
    let second = |nu: f64, rng: &mut _| -> Vec<f64> {
        (0..4)
            .map(|k| {
                let m: RunningMoments = (0..(10_000 << (2 * k)))
                    .map(|_| student_t_sample(nu, FieldTag::Complex, rng).unwrap().abs2())
                    .collect();
                m.mean
            })
            .collect()
    };
    let finite = second(3.5, &mut rng);
    // E|w|^2 = kappa / (2 (nu - kappa/2 - 1)) = 2/3
    assert!((finite[3] - 2.0 / 3.0).abs() < 0.02, "{finite:?}");
    // running means of a law without a second moment keep growing
    let infinite = second(1.6, &mut rng);
    assert!(infinite[3] > 3.0 * infinite[0], "{infinite:?}");
}

#[test]
fn conditional_center_is_median() {
    let tag = FieldTag::Complex;
    let mut rng = stream_rng(3, 0);
    let mut z = UnitriangularMatrix::random_gaussian(3, tag, &mut rng);
    z.set_entry(2, 3, Scalar::zero(tag)).unwrap();
    let center = z.quad_coeffs_at(2, 3).unwrap().center();
    let n = 40_000;
    for comp in 0..2 {
        let mut xs: Vec<f64> =
            (0..n).map(|_| conditional_entry_sample(&z, 2, 3, 2.0, &mut rng).unwrap().component(comp)).collect();
        xs.sort_by(f64::total_cmp);
        let scale = z.quad_coeffs_at(2, 3).unwrap();
        let spread = (scale.discriminant()).sqrt() / scale.a;
        assert!((xs[n / 2] - center.component(comp)).abs() < 0.05 * spread);
    }
}

#[test]
fn conditional_density_slope() {
    // bin counts near the center scale like s^{-nu}; fit the log-log slope
    let tag = FieldTag::Real;
    let mut rng = stream_rng(4, 0);
    let mut z = UnitriangularMatrix::random_gaussian(3, tag, &mut rng);
    z.set_entry(1, 3, Scalar::zero(tag)).unwrap();
    let nu = 1.7;
    let qc = z.quad_coeffs_at(1, 3).unwrap();
    let n = 400_000;
    let mut hist = [0usize; 8];
    let width = 0.5 * qc.discriminant().sqrt() / qc.a;
    for _ in 0..n {
        let u = conditional_entry_sample(&z, 1, 3, nu, &mut rng).unwrap();
        let off = (u - qc.center()).re();
        let bin = (off.abs() / width) as usize;
        if bin < hist.len() {
            hist[bin] += 1;
        }
    }
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (k, &c) in hist.iter().enumerate() {
        let mid = (k as f64 + 0.5) * width;
        let u = qc.center() + Scalar::real(mid, tag);
        let x = qc.eval(u).ln();
        let y = (c as f64).ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let m = hist.len() as f64;
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    assert!((slope / -nu - 1.0).abs() < 0.03, "slope {slope}");
}

fn projected_features(z: &UnitriangularMatrix) -> Vec<f64> {
    let mut f: Vec<f64> = z.log_s_table().into_iter().flatten().collect();
    for e in z.entries() {
        f.extend(e.components().iter().map(|x| x.asinh()));
    }
    f
}

#[test]
fn projection_matches_lower_level() {
    for (n, tag) in [(3, FieldTag::Quaternion), (4, FieldTag::Complex), (4, FieldTag::Quaternion)] {
        let spec = MeasureSpec::default_for(n, tag);
        let lower = spec.prefix(n - 1).unwrap();
        let seed = 17;
        let x: Vec<Vec<f64>> = sample_flags(&spec, 400, seed, stream_base(1))
            .unwrap()
            .iter()
            .map(|s| projected_features(&s.z.project().unwrap()))
            .collect();
        let y: Vec<Vec<f64>> =
            sample_flags(&lower, 400, seed, stream_base(2)).unwrap().iter().map(|s| projected_features(&s.z)).collect();
        let out = energy_test(&x, &y, 199, &mut stream_rng(seed, stream_base(3)));
        assert!(out.p_value > 0.01, "n={n} {tag}: p = {}", out.p_value);
    }
}

/// `E[s_pq^{-delta}]` under the normalized family equals a ratio of closed forms.
#[test]
fn negative_moments_match_closed_form() {
    for (n, tag) in [(3, FieldTag::Real), (3, FieldTag::Complex), (3, FieldTag::Quaternion), (4, FieldTag::Real)] {
        let spec = MeasureSpec::default_for(n, tag);
        let base = ExponentSet::from_fn(n, |p, q| Complex64::new(if q == n { spec.lambda()[p - 1] } else { 0.0 }, 0.0))
            .unwrap();
        let samples = sample_flags(&spec, 60_000, 23, 0).unwrap();
        let delta = 0.5;
        for (p, q) in flagbeta::closed_form::pairs(n) {
            let m: RunningMoments = samples.iter().map(|s| (-delta * s.z.log_s(p, q).unwrap()).exp()).collect();
            let shifted =
                ExponentSet::from_fn(n, |a, b| base.get(a, b) + if (a, b) == (p, q) { delta } else { 0.0 }).unwrap();
            let expected = (main_rhs(&shifted, tag).unwrap() - main_rhs(&base, tag).unwrap()).exp().re;
            let z = (m.mean - expected) / m.stderr();
            assert!(z.abs() < 4.0, "n={n} {tag} s_{p}{q}: mean {} vs {expected} (z = {z:.2})", m.mean);
        }
    }
}

#[test]
fn estimators_with_different_proposals_agree() {
    let l = ExponentSet::from_real(3, &[2.0, 1.5, 2.5]).unwrap();
    let tag = FieldTag::Real;
    let a = is_mc_estimate(&l, &proposal_for(&l, tag, ProposalRule::RowSum).unwrap(), 200_000, 5).unwrap();
    let b =
        is_mc_estimate(&l, &proposal_for(&l, tag, ProposalRule::TailMatched { fraction: 0.5 }).unwrap(), 200_000, 6)
            .unwrap();
    let c = is_mc_estimate(&l, &proposal_for(&l, tag, ProposalRule::Entrywise { temper: 0.2 }).unwrap(), 200_000, 7)
        .unwrap();
    for (x, y) in [(a, b), (a, c), (b, c)] {
        let joint = (x.mean - y.mean) / (x.stderr.powi(2) + y.stderr.powi(2)).sqrt();
        assert!(joint.abs() < 5.0, "{x:?} vs {y:?}");
    }
    let expected = main_rhs(&l, tag).unwrap().exp().re;
    assert!([a, b, c].iter().all(|e| e.z_score(expected).abs() < 4.0));
}

#[test]
fn entrywise_estimate_rejects_a_two_percent_error() {
    for tag in FieldTag::ALL {
        let k = tag.kappa_f64();
        let l = ExponentSet::from_real(
            4,
            &[k / 2.0 + 1.4, k / 2.0 + 0.3, k / 2.0 + 0.9, k / 2.0 + 0.6, k / 2.0 + 1.1, k / 2.0 + 0.7],
        )
        .unwrap();
        let prop = proposal_for(&l, tag, ProposalRule::Entrywise { temper: 0.2 }).unwrap();
        let est = is_mc_estimate(&l, &prop, 100_000, 12).unwrap();
        let expected = main_rhs(&l, tag).unwrap().exp().re;
        assert!(est.z_score(expected).abs() < 4.0, "{tag}: {est:?} vs {expected}");
        assert!(est.z_score(1.02 * expected).abs() > 4.0, "{tag}: {est:?}");
    }
}

#[test]
fn log_density_recomputes_from_entries() {
    for tag in FieldTag::ALL {
        let spec = MeasureSpec::default_for(4, tag);
        for s in sample_flags(&spec, 2000, 31, 0).unwrap() {
            let rebuilt = UnitriangularMatrix::from_entries(4, tag, &s.z.entries()).unwrap();
            let again = spec.log_density(&rebuilt).unwrap();
            assert!((again - s.log_density).abs() <= 1e-10 * s.log_density.abs().max(1.0));
        }
    }
}
