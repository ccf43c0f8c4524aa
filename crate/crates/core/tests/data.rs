mod common;

use common::random;
use netsync::data::{build_matrices, consistency_residual, generate_data, is_identifiable, DataRecord};
use netsync::linalg::{self, Matrix};
use netsync::network::LtiModel;
use proptest::prelude::*;

fn combine(a: &LtiModel, b: &LtiModel, alpha: f64) -> LtiModel {
    LtiModel::new(
        a.a() * alpha + b.a() * (1.0 - alpha),
        a.b() * alpha + b.b() * (1.0 - alpha),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn consistent_set_is_affine(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let n = 1 + (seed % 3) as usize;
        let m = 1 + (seed / 3 % 2) as usize;
        let model = random::model(&mut rng, n, m);
        let samples = 1 + (seed / 6 % 5) as usize;
        let dm = random::data_with_input_rank(&mut rng, &model, samples, m);
        let s1 = random::consistent_system(&mut rng, &dm, 1.0);
        let s2 = random::consistent_system(&mut rng, &dm, 1.0);
        let scale = dm.x_plus().norm().max(1.0);
        for alpha in [-1.0, 0.5, 2.0] {
            let mix = combine(&s1, &s2, alpha);
            prop_assert!(consistency_residual(&mix, &dm).unwrap() <= 1e-9 * scale * 4.0);
        }
    }

    #[test]
    fn rich_data_identify_the_system(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let n = 1 + (seed % 3) as usize;
        let m = 1 + (seed / 3 % 2) as usize;
        let model = random::model(&mut rng, n, m);
        let inputs = random::matrix(&mut rng, m, n + m + 3, 1.0);
        let x0 = random::vector(&mut rng, n, 1.0);
        let record = generate_data(&model, &x0, &inputs).unwrap();
        let dm = build_matrices(&record);
        let id = is_identifiable(&dm).unwrap();
        prop_assume!(linalg::numerical_rank(&dm.stacked()).unwrap().singular_values
            .last().copied().unwrap_or(0.0) > 1e-4);
        prop_assert!(id.identifiable);
        let found = id.model.unwrap();
        prop_assert!((found.a() - model.a()).amax() <= 1e-10);
        prop_assert!((found.b() - model.b()).amax() <= 1e-10);
    }

    #[test]
    fn rank_grows_with_record_length(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let n = 1 + (seed % 3) as usize;
        let m = 1 + (seed / 3 % 2) as usize;
        let model = random::model(&mut rng, n, m);
        let t = 8;
        let inputs = random::matrix(&mut rng, m, t, 1.0);
        let record = generate_data(&model, &random::vector(&mut rng, n, 1.0), &inputs).unwrap();
        let mut last = 0;
        for len in 1..=t {
            let prefix = DataRecord::new(
                record.inputs().columns(0, len).into_owned(),
                record.states().columns(0, len + 1).into_owned(),
            ).unwrap();
            let rank = linalg::numerical_rank(&build_matrices(&prefix).stacked()).unwrap().rank;
            prop_assert!(rank >= last && rank <= len.min(n + m));
            last = rank;
        }
    }

    #[test]
    fn generated_data_are_consistent_with_their_model(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let model = random::model(&mut rng, 3, 2);
        let dm = random::data_with_input_rank(&mut rng, &model, 6, 1);
        let scale = dm.x_plus().norm().max(1.0);
        prop_assert!(consistency_residual(&model, &dm).unwrap() <= 1e-12 * scale);
        // one-dimensional inputs leave [X-; U-] rank deficient
        prop_assert!(!is_identifiable(&dm).unwrap().identifiable);
    }
}

#[test]
fn reference_data_matrices() {
    let dm = common::data();
    assert_eq!(dm.samples(), 4);
    assert_eq!(consistency_residual(&common::model(), &dm).unwrap(), 0.0);
    assert_eq!(linalg::numerical_rank(dm.x_minus()).unwrap().rank, 3);
    let id = is_identifiable(&dm).unwrap();
    assert!(!id.identifiable);
    assert_eq!((id.rank, id.full_rank), (4, 5));
    assert!(id.model.is_none());
}

#[test]
fn reference_data_admit_other_systems() {
    // Shifting [A B] along the left kernel of [X-; U-] keeps the data consistent.
    let dm = common::data();
    let kernel = linalg::null_space(&dm.stacked().transpose()).unwrap();
    assert_eq!(kernel.ncols(), 1);
    let shift = Matrix::from_row_slice(3, 1, &[1.0, -2.0, 0.5]) * kernel.transpose();
    let other = LtiModel::new(
        common::a_true() + shift.columns(0, 3),
        common::b_true() + shift.columns(3, 2),
    )
    .unwrap();
    assert!(consistency_residual(&other, &dm).unwrap() < 1e-14);
    // the kernel direction only moves B: the data pin down A
    assert!((other.a() - common::a_true()).norm() < 1e-14);
    assert!((other.b() - common::b_true()).norm() > 0.1);
}
