pub mod linalg;
pub mod model;
pub mod oracle;
pub mod scalar;
pub mod sim;
pub mod staged;
