use nullflow::{Error, FieldSnapshot, ScalarField, SphereGrid};
use proptest::prelude::*;

fn grid_strategy() -> impl Strategy<Value = SphereGrid> {
    prop_oneof![
        (4usize..20).prop_map(|n| SphereGrid::axisymmetric(n).unwrap()),
        (4usize..12, 2usize..8).prop_map(|(n, m)| SphereGrid::full(n, 2 * m).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn write_read_is_bit_exact(
        grid in grid_strategy(),
        seed in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 1..4),
        t in prop::num::f64::NORMAL,
    ) {
        let mut snap = FieldSnapshot::new(grid).with_meta("t", t).with_meta("note", "free text here");
        for (k, s) in seed.iter().enumerate() {
            let f = ScalarField::from_fn(grid, |th, ph| s * (1.0 + th * 0.37 + ph * 0.11));
            snap = snap.with_field(&format!("f{k}"), &f).unwrap();
        }
        let back = FieldSnapshot::read_from(snap.to_text().as_bytes()).unwrap();
        prop_assert_eq!(back.grid, grid);
        prop_assert_eq!(back.meta_f64("t").unwrap().to_bits(), t.to_bits());
        prop_assert_eq!(back.meta("note"), Some("free text here"));
        for ((n1, v1), (n2, v2)) in back.fields.iter().zip(&snap.fields) {
            prop_assert_eq!(n1, n2);
            for (a, b) in v1.iter().zip(v2) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}

#[test]
fn malformed_headers_are_parse_errors() {
    let grid = SphereGrid::full(4, 4).unwrap();
    let text = FieldSnapshot::new(grid)
        .with_field("w", &ScalarField::constant(grid, 2.0))
        .unwrap()
        .to_text();
    for bad in [
        text.replacen("nullflow-field", "other-format", 1),
        text.replacen("n_phi 4", "n_phi 5", 1),
        text.replacen("data\n", "", 1),
        format!("{text}1\n"),
    ] {
        assert!(matches!(FieldSnapshot::read_from(bad.as_bytes()), Err(Error::Parse(_)) | Err(Error::Parameter(_))), "{bad}");
    }
}

#[test]
fn fields_must_match_the_grid_and_have_plain_names() {
    let grid = SphereGrid::axisymmetric(4).unwrap();
    let other = SphereGrid::axisymmetric(5).unwrap();
    assert!(FieldSnapshot::new(grid).with_field("w", &ScalarField::zeros(other)).is_err());
    assert!(FieldSnapshot::new(grid).with_field("two words", &ScalarField::zeros(grid)).is_err());
    let snap = FieldSnapshot::new(grid);
    assert!(matches!(snap.field("missing"), Err(Error::Parse(_))));
    assert!(matches!(snap.meta_f64("t"), Err(Error::Parse(_))));
}
