pub mod baselines;
pub mod optimal;

pub use baselines::{
    beam_search_heuristic, beam_search_vanilla, brute_force, label_key, state_space_size,
    BeamConfig, BruteForceResult, DEFAULT_BRUTE_FORCE_CAP,
};
pub use optimal::{optimal_search, NodeKind, OptimalSearch, SearchConfig, SearchNode, Tier};
