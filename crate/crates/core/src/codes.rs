//! Built-in code fixtures.

use crate::codec::{derive_rate_half_subcode, expand_base_graph, parse_alist, parse_base_graph, ParityCheckMatrix};

pub const HAMMING_74_ALIST: &str = include_str!("../fixtures/hamming74.alist");
pub const LDPC_40_20_ALIST: &str = include_str!("../fixtures/ldpc_40_20.alist");
/// 5G NR base graph 2, shift coefficients of lifting-set index 0.
pub const NR_BG2_SET0: &str = include_str!("../fixtures/nr_bg2_set0.txt");

/// The (7,4) Hamming code, checks `{0,1,2,4}`, `{0,1,3,5}`, `{0,2,3,6}`.
pub fn hamming_74() -> ParityCheckMatrix {
    parse_alist(HAMMING_74_ALIST).expect("bundled Hamming fixture parses")
}

/// The rate one-half (40,20) code shipped as an alist fixture.
pub fn ldpc_40_20() -> ParityCheckMatrix {
    parse_alist(LDPC_40_20_ALIST).expect("bundled (40,20) fixture parses")
}

/// Rebuilds the (40,20) code: lift base graph 2 with `Z = 2` (the fixture
/// header) and keep the top-left 20 x 40 block.
pub fn derive_ldpc_40_20() -> ParityCheckMatrix {
    let bg = parse_base_graph(NR_BG2_SET0).expect("bundled base graph parses");
    derive_rate_half_subcode(&expand_base_graph(&bg), 20, 40).expect("top-left block has full rank")
}

/// Resolves a `--code` argument: a built-in name or a path to an alist file.
pub fn load_code(name: &str) -> Result<ParityCheckMatrix, anyhow::Error> {
    match name {
        "hamming74" | "hamming" => Ok(hamming_74()),
        "ldpc40" | "ldpc_40_20" => Ok(ldpc_40_20()),
        path => {
            let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("cannot read {path}: {e}"))?;
            parse_alist(&text).map_err(|e| anyhow::anyhow!("{path}: {e}"))
        }
    }
}
