pub mod ids;
pub mod registry;
pub mod time;
pub mod world;
pub mod channel;
pub mod resource;
pub mod link_protocol;
pub mod scenario;
pub mod engine;
pub mod output;
