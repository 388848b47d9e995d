//! Exact optimal stopping on finite probability trees: Snell envelope,
//! Doob–Meyer decomposition, the future-supremum process and the
//! uniqueness of the martingale that makes it predictable.

mod campaign;
mod decomposition;
mod lattice;
mod oracle;
pub mod random;
mod tree;

pub use campaign::{run_campaign, CampaignConfig, CampaignReport, Violation};
pub use decomposition::{
    check_predictable, doob_meyer, future_supremum, snell_envelope, uniqueness_probe, verify_representation,
    Predictability, SnellDecomposition, UniquenessVerdict,
};
pub use lattice::{tree_from_market, BinomialLattice, MAX_EXPANDED_STEPS};
pub use oracle::{enumerate_stopping_value, stopping_time_count, DEFAULT_ORACLE_LIMIT};
pub use tree::{FiniteTree, NodeRecord, TreeDocument, TreeProcess};
