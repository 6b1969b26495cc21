#![no_main]

use libfuzzer_sys::fuzz_target;
use mgrit_cli::ExperimentSpec;

fuzz_target!(|data: &str| {
    let Ok(spec) = ExperimentSpec::from_json(data) else {
        return;
    };
    if spec.validate().is_ok() {
        let _ = spec.mgrit_config().validate();
        let again = ExperimentSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(again.to_json(), spec.to_json());
    }
});
