pub mod autodiff;
pub mod neural;
pub mod env;
pub mod logic;
pub mod training;
pub mod evaluation;
pub mod post_training;
