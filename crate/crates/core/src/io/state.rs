//! Pool state as a JSON document.
//!
//! ```json
//! {
//!   "version": 1,
//!   "round": 2,
//!   "seed": 7,
//!   "labeled": ["0:0", "0:3"],
//!   "unlabeled": ["1:0"],
//!   "test": ["4:0"]
//! }
//! ```
//!
//! Frame ids are `"video:index"` strings in ascending order. Unknown keys are
//! rejected; `version` must be 1.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::atomic_write;
use crate::model::{FrameId, PoolState};

pub const STATE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateDoc {
    version: u32,
    round: u64,
    seed: u64,
    labeled: BTreeSet<FrameId>,
    unlabeled: BTreeSet<FrameId>,
    test: BTreeSet<FrameId>,
}

pub fn render_state(state: &PoolState) -> Result<String> {
    let doc = StateDoc {
        version: STATE_VERSION,
        round: state.round,
        seed: state.seed,
        labeled: state.labeled.clone(),
        unlabeled: state.unlabeled.clone(),
        test: state.test.clone(),
    };
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

pub fn parse_state(text: &str) -> Result<PoolState> {
    let doc: StateDoc = serde_json::from_str(text)?;
    if doc.version != STATE_VERSION {
        return Err(Error::Parse {
            line: 1,
            message: format!("pool state version {} is not supported", doc.version),
        });
    }
    let state = PoolState {
        labeled: doc.labeled,
        unlabeled: doc.unlabeled,
        test: doc.test,
        round: doc.round,
        seed: doc.seed,
    };
    let overlap = state
        .labeled
        .intersection(&state.unlabeled)
        .chain(state.labeled.intersection(&state.test))
        .chain(state.unlabeled.intersection(&state.test))
        .next()
        .copied();
    if let Some(id) = overlap {
        return Err(Error::Parse {
            line: 1,
            message: format!("frame {id} appears in more than one set"),
        });
    }
    Ok(state)
}

pub fn save_state(path: impl AsRef<Path>, state: &PoolState) -> Result<()> {
    atomic_write(path, render_state(state)?.as_bytes())
}

pub fn load_state(path: impl AsRef<Path>) -> Result<PoolState> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_state(&text)
}
