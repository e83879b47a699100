pub mod acceptance;
pub mod beam;
pub mod cli;
pub mod linkmetrics;
pub mod losmodel;
pub mod mcengine;
pub mod pathloss;
pub mod randkit;
pub mod scenario;
