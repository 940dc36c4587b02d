use flagbeta::closed_form::{log_total_mass, main_rhs, ColumnExponents, ExponentSet};
use flagbeta::importance::{proposal_for, ProposalRule};
use flagbeta::matrix::desnanot_jacobi_check;
use flagbeta::rng::stream_rng;
use flagbeta::{FieldTag, MatrixK, Scalar, UnitriangularMatrix};
use proptest::prelude::*;

fn field() -> impl Strategy<Value = FieldTag> {
    prop_oneof![Just(FieldTag::Real), Just(FieldTag::Complex), Just(FieldTag::Quaternion)]
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn coefficient_identities(n in 2usize..=6, tag in field(), seed in any::<u64>()) {
        let z = UnitriangularMatrix::random_gaussian(n, tag, &mut stream_rng(seed, 0));
        for p in 1..n {
            let qc = z.quad_coeffs(p).unwrap();
            prop_assert!(rel(qc.a, z.s_ext(p - 1, n - 1).unwrap()) < 1e-9);
            let disc = z.s_ext(p - 1, n).unwrap() * z.s_ext(p, n - 1).unwrap();
            prop_assert!(rel(qc.discriminant(), disc) < 1e-9);
        }
    }

    #[test]
    fn coefficients_reproduce_statistic(n in 2usize..=5, tag in field(), seed in any::<u64>(), u in proptest::collection::vec(-5.0f64..5.0, 4)) {
        let mut z = UnitriangularMatrix::random_gaussian(n, tag, &mut stream_rng(seed, 1));
        let p = 1 + (seed as usize) % (n - 1);
        let qc = z.quad_coeffs(p).unwrap();
        let value = Scalar::from_components(&u[..tag.kappa()], tag);
        z.set_entry(p, n, value).unwrap();
        let s = z.s(p, n).unwrap();
        prop_assert!(rel(qc.eval(value), s) < 1e-9);
    }

    #[test]
    fn statistics_positive_and_bounded_below(n in 2usize..=6, tag in field(), seed in any::<u64>()) {
        let z = UnitriangularMatrix::random_gaussian(n, tag, &mut stream_rng(seed, 2));
        for q in 2..=n {
            let logs = z.log_s_column(q).unwrap();
            for (p, &l) in logs.iter().enumerate() {
                // s_pq >= 1: the corner contains an identity block
                prop_assert!(l >= -1e-12, "ln s_{}{} = {}", p + 1, q, l);
            }
        }
    }

    #[test]
    fn entrywise_exponents_at_nu_reproduce_lambda(n in 2usize..=7, tag in field(), seed in any::<u64>()) {
        let k = tag.kappa_f64();
        let mut rng = stream_rng(seed, 6);
        let values: Vec<f64> = (0..n * (n - 1) / 2).map(|_| k / 2.0 + 0.1 + 2.0 * rand::Rng::random::<f64>(&mut rng)).collect();
        let l = ExponentSet::from_real(n, &values).unwrap();
        let e = proposal_for(&l, tag, ProposalRule::Entrywise { temper: 0.0 }).unwrap();
        let mu = e.density_exponents();
        for ((p, q), lam) in l.iter() {
            prop_assert!((mu[q - 2][p - 1] - lam.re).abs() < 1e-10, "({}, {}): {} vs {}", p, q, mu[q - 2][p - 1], lam.re);
        }
        let rhs = main_rhs(&l, tag).unwrap().re;
        prop_assert!((e.log_normalizer() - rhs).abs() < 1e-9 * rhs.abs().max(1.0));
    }

    #[test]
    fn qdet_multiplicative(m in 1usize..=4, tag in field(), seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 3);
        let a = MatrixK::random_gaussian(m, m, tag, &mut rng);
        let b = MatrixK::random_gaussian(m, m, tag, &mut rng);
        let lhs = (&a * &b).qdet().unwrap();
        let rhs = a.qdet().unwrap() * b.qdet().unwrap();
        prop_assert!(rel(lhs, rhs) < 1e-8);
    }

    #[test]
    fn qdet_agrees_with_abs_det(m in 1usize..=5, complex in any::<bool>(), seed in any::<u64>()) {
        let tag = if complex { FieldTag::Complex } else { FieldTag::Real };
        let a = MatrixK::random_gaussian(m, m, tag, &mut stream_rng(seed, 4));
        let d = a.det_rc().unwrap().abs();
        prop_assert!(rel(a.qdet().unwrap(), d) < 1e-10);
    }

    #[test]
    fn unitriangular_qdet_is_one(n in 1usize..=6, tag in field(), seed in any::<u64>()) {
        let z = UnitriangularMatrix::random_gaussian(n, tag, &mut stream_rng(seed, 5)).to_matrix();
        prop_assert!((z.qdet().unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn schur_factorization(m in 2usize..=5, tag in field(), seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 6);
        let a = MatrixK::random_gaussian(m, m + 1, tag, &mut rng);
        let pd = a.gram();
        let split = 1 + (seed as usize) % (m - 1);
        let s = pd.schur_complement(split).unwrap();
        let rhs = pd.block(0, split, 0, split).qdet().unwrap() * s.qdet().unwrap();
        prop_assert!(rel(pd.qdet().unwrap(), rhs) < 1e-8);
        for k in 1..=s.rows() {
            prop_assert!(s.block(0, k, 0, k).qdet().unwrap() > 0.0);
        }
    }

    #[test]
    fn gram_leading_minors_positive(p in 1usize..=5, tag in field(), seed in any::<u64>()) {
        let z = UnitriangularMatrix::random_gaussian(6, tag, &mut stream_rng(seed, 7));
        let g = z.corner(p, 6).unwrap().gram();
        prop_assert!(g.is_hermitian(1e-10));
        for k in 1..=p {
            prop_assert!(g.block(0, k, 0, k).qdet().unwrap() > 0.0);
        }
    }

    #[test]
    fn desnanot_jacobi_commutative(m in 3usize..=6, complex in any::<bool>(), seed in any::<u64>()) {
        let tag = if complex { FieldTag::Complex } else { FieldTag::Real };
        let s = MatrixK::random_gaussian(m, m, tag, &mut stream_rng(seed, 8));
        prop_assert!(desnanot_jacobi_check(&s, 1e-9).unwrap());
    }

    #[test]
    fn column_family_mass_matches_main(l1 in 0.0f64..3.0, l2 in 0.0f64..3.0, l3 in 0.0f64..3.0, tag in field()) {
        let half = tag.kappa_f64() / 2.0;
        let lam = [half + 0.2 + l1, half + 0.2 + l2, half + 0.2 + l3];
        let col = ExponentSet::column_only(&ColumnExponents::from_real(&lam).unwrap());
        let mass = log_total_mass(&lam, tag).unwrap();
        let direct = main_rhs(&col, tag).unwrap();
        prop_assert!((mass - direct.re).abs() < 1e-10 * mass.abs().max(1.0));
    }
}

#[test]
fn mass_of_order_three_family() {
    // ∫ s_13^{-l1} s_23^{-l2} dZ both ways
    for tag in FieldTag::ALL {
        let half = tag.kappa_f64() / 2.0;
        let lam = [half + 1.1, half + 0.6];
        let col = ExponentSet::column_only(&ColumnExponents::from_real(&lam).unwrap());
        let a = log_total_mass(&lam, tag).unwrap();
        let b = main_rhs(&col, tag).unwrap();
        assert!((a - b.re).abs() < 1e-12 && b.im == 0.0);
    }
}
