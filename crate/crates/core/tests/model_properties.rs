mod common;

use kiss_control::model::{validate_layout, PatchLayout};
use proptest::prelude::*;

proptest! {
    #[test]
    fn scalar_layout_json_round_trip(layout in common::scalar_layout()) {
        let layout = validate_layout(layout).unwrap();
        let back = PatchLayout::from_json(&layout.to_json()).unwrap();
        prop_assert_eq!(back, layout);
    }

    #[test]
    fn staged_layout_json_round_trip(layout in common::staged_layout()) {
        let layout = validate_layout(layout).unwrap();
        let back = PatchLayout::from_json(&layout.to_json()).unwrap();
        prop_assert_eq!(back, layout);
    }

    #[test]
    fn validation_is_idempotent(layout in prop_oneof![common::scalar_layout(), common::staged_layout()]) {
        let once = validate_layout(layout).unwrap();
        let twice = validate_layout(once.clone()).unwrap();
        prop_assert_eq!(once, twice);
    }
}
