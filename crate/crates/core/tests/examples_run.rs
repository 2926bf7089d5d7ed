//! Runs every cargo example through its `run` entry point.

macro_rules! example {
    ($name:ident, $path:literal) => {
        #[allow(dead_code)]
        #[path = $path]
        mod $name;

        #[test]
        fn $name() {
            $name::run().unwrap();
        }
    };
}

example!(expressions, "../examples/expressions.rs");
example!(classify_catalog, "../examples/classify_catalog.rs");
example!(rank_profile, "../examples/rank_profile.rs");
example!(twisted_structure, "../examples/twisted_structure.rs");
example!(stationary_paths, "../examples/stationary_paths.rs");
example!(differential_check, "../examples/differential_check.rs");
example!(counterexample_ii, "../examples/counterexample_ii.rs");
example!(theorem_sweep, "../examples/theorem_sweep.rs");
example!(sigma_equality, "../examples/sigma_equality.rs");
example!(scenario_roundtrip, "../examples/scenario_roundtrip.rs");
example!(connection_identities, "../examples/connection_identities.rs");
