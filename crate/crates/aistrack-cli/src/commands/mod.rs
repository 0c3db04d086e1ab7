pub mod assess;
pub mod calibrate;
pub mod compare;
pub mod decode;
pub mod extract;
