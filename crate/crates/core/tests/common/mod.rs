pub mod propane;
