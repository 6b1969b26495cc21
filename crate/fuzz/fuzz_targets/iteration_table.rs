#![no_main]

use libfuzzer_sys::fuzz_target;
use mgrit_cli::IterationTable;

fuzz_target!(|data: &str| {
    let Ok(table) = IterationTable::from_csv(data) else {
        return;
    };
    if table.columns.iter().all(|(tf, _)| tf.is_finite()) {
        let text = table.to_csv().unwrap();
        assert_eq!(IterationTable::from_csv(&text).unwrap(), table);
    }
});
