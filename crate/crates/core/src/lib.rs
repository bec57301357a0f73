pub mod exact;
pub mod padic;
pub mod elliptic;
pub mod archlfun;
pub mod modsym;
pub mod padiclfun;
pub mod crystalline;
pub mod recover;
