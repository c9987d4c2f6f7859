#![no_main]

use libfuzzer_sys::fuzz_target;
use glref::strip::ELTable;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(table) = ELTable::from_jsonl(text) {
            let again = ELTable::from_jsonl(&table.to_jsonl().expect("serializes")).expect("round trip");
            assert_eq!(again.rows.len(), table.rows.len());
        }
    }
});
