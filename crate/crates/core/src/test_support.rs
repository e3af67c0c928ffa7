use std::sync::{Arc, OnceLock};

use crate::ladder::{LadderModel, LadderParams};
use crate::quadrature::{HlStore, QuadratureSpec, StoreParams};
use crate::zeta::ZetaEngine;

/// One in-memory ladder shared by all unit tests in the binary.
pub(crate) fn ladder() -> &'static LadderModel {
    static MODEL: OnceLock<LadderModel> = OnceLock::new();
    MODEL.get_or_init(|| {
        let store = HlStore::open(
            ZetaEngine::default(),
            QuadratureSpec::default(),
            StoreParams::default(),
            None,
        )
        .expect("in-memory store");
        LadderModel::new(
            Arc::new(store),
            ZetaEngine::default(),
            LadderParams::default(),
        )
        .expect("ladder")
    })
}
