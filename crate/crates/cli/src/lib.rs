pub mod bench;
pub mod output;
pub mod track;
