//! Channels with one or two slots of memory.

mod chain;
mod descent;
mod strategy5;
mod suboptimal;
mod weights;

pub use chain::{exact_pe_isi, exact_pe_isi_with_cap, two_symbol_chain, IsiChain};
pub use descent::{optimize_strategy4_isi, DescentOptions};
pub use strategy5::{
    strategy5_pe_1isi, strategy5_pe_bounds_1isi, strategy5_rates_1isi, strategy5_rates_online,
    strategy5_threshold,
};
pub use suboptimal::{
    isi_adaptive_policy, isi_adaptive_threshold, suboptimal_increments_1isi,
    suboptimal_increments_2isi,
};
pub use weights::{
    isi_table_1isi, isi_table_2isi, received_means, signal_weights, IsiValueTable, SignalWeights,
};
