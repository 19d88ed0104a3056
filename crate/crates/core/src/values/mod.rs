//! Badge value functions: peer leadership, network trend, personal interest
//! and their weighted combination.

mod fit;
mod interest;
mod model;
mod peer;
mod trend;

pub use fit::{fit_peer_function, fit_peer_function_with, ExpSearch};
pub use interest::{badge_similarity, personal_interest_value, SimilarityMatrix};
pub use model::{
    comprehensive_value, mine_rules, ValueComponents, ValueModel, ValueModelConfig, ValueWeights,
};
pub use peer::{
    empirical_ratio_curve, eval_peer_value, peer_ratio, ratio_bin, AchievementIndex,
    PeerCurvePoints, PeerFamily, PeerLeadershipModel, N_BINS,
};
pub use trend::{network_trend_value, RuleIndex};
