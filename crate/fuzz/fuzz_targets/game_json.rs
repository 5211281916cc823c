#![no_main]

use kfca_core::shapley::TabularGame;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(game) = TabularGame::from_json(text) {
        assert_eq!(TabularGame::from_json(&game.to_json()).expect("own JSON parses"), game);
    }
});
