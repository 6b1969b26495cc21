#![no_main]

use libfuzzer_sys::fuzz_target;
use mgrit_cli::csvio::{parse_h_list, parse_u0};
use mgrit_cli::Cell;

fuzz_target!(|data: &str| {
    if let Ok(u) = parse_u0(data) {
        assert!(u.iter().all(|x| x.is_finite()));
    }
    if let Ok(hs) = parse_h_list(data) {
        assert!(!hs.is_empty());
    }
    if let Ok(cell) = data.parse::<Cell>() {
        assert_eq!(cell.to_string().parse::<Cell>().unwrap(), cell);
    }
});
