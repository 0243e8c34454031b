pub mod padic;
pub mod intmat;
pub mod zp_linalg;
pub mod number_field;
pub mod weight_space;
pub mod eigenvariety;
pub mod demos;
mod util;
