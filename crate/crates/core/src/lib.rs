pub mod error;
pub mod evidence;
pub mod logic;
pub mod parser;
pub mod ground;
pub mod infer;
pub mod learn;
pub mod fusion;
pub mod pipeline;
pub mod tracklet;
