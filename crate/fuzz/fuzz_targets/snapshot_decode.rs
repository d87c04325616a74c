#![no_main]

use libfuzzer_sys::fuzz_target;
use smartchoices::tinynet::ParamSnapshot;

fuzz_target!(|data: &[u8]| {
    // anything that decodes must survive a round trip unchanged
    if let Ok(snap) = ParamSnapshot::decode(data) {
        let again = ParamSnapshot::decode(&snap.encode()).expect("re-encoded snapshot decodes");
        assert_eq!(snap.tensors.len(), again.tensors.len());
        for (a, b) in snap.tensors.iter().zip(&again.tensors) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.shape, b.shape);
            assert!(a.data.iter().zip(&b.data).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }
});
