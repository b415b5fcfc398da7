//! The chapters of the guide in `book/`, included here so their Rust listings
//! run as doctests.

macro_rules! chapter {
    ($name:ident, $file:literal) => {
        #[doc = include_str!(concat!("../../../book/src/", $file))]
        pub mod $name {}
    };
}

chapter!(introduction, "introduction.md");
chapter!(forms, "forms.md");
chapter!(derivation, "derivation.md");
chapter!(integrators, "integrators.md");
chapter!(diagnostics, "diagnostics.md");
chapter!(cli, "cli.md");
