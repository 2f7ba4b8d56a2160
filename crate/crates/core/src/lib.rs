pub mod baseline;
pub mod bitvec;
pub mod bp;
pub mod distance;
pub mod gen;
pub mod newick;
pub mod treeio;
