pub mod cli;
pub mod corrector;
pub mod dsl;
pub mod eval;
pub mod generator;
pub mod http;
pub mod interpreter;
pub mod llm;
pub mod registry;
pub mod refiner;
pub mod synthetic;
pub mod validator;
pub mod world;
