pub mod cert;
pub mod corec;
pub mod harness;
pub mod mutation;
pub mod solver;
pub mod symexec;
pub mod symstore;
pub mod syntax;
pub mod vfsem;
