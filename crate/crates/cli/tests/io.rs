use nalgebra::DMatrix;
use proptest::prelude::*;
use sbbp::io;
use sbbp_core::construct::FeatureAllocation;
use sbbp_core::model::Dataset;
use tempfile::TempDir;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reals_round_trip_through_text(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let back: f64 = io::fmt_f64(x).parse().unwrap();
        prop_assert_eq!(back.to_bits(), x.to_bits());
    }

    #[test]
    fn allocations_round_trip(bits in prop::collection::vec(prop::collection::vec(any::<bool>(), 4), 0..12)) {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("z.csv");
        let mut z = FeatureAllocation::new(vec![3, 0, 7, 2], bits.len());
        for (r, row) in bits.iter().enumerate() {
            for (k, &b) in row.iter().enumerate() {
                z.set(r, k, b);
            }
        }
        io::write_allocation(&path, &z).unwrap();
        prop_assert_eq!(io::read_allocation(&path).unwrap(), z);
    }

    #[test]
    fn datasets_round_trip(values in prop::collection::vec(-1e6f64..1e6, 3 * 5)) {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("data.csv");
        let data = Dataset::new(DMatrix::from_vec(3, 5, values)).unwrap();
        io::write_dataset(&path, &data).unwrap();
        prop_assert_eq!(io::read_dataset(&path).unwrap(), data);
    }
}

#[test]
fn malformed_files_are_rejected() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("atoms.csv");
    std::fs::write(&path, "theta,pi,round\n0.5,0.2,0\n").unwrap();
    assert!(io::read_atoms(&path).is_err());
    std::fs::write(&path, "theta,weight,round\n0.5,0.2,1\n").unwrap();
    assert!(io::read_atoms(&path).is_err());
    std::fs::write(&path, "row,atom_0\n0,2\n").unwrap();
    assert!(io::read_allocation(&path).is_err());
}
