//! Every example runs to completion on a small setting.

macro_rules! example {
    ($name:ident, $file:literal) => {
        #[allow(dead_code)]
        #[path = $file]
        mod $name;

        #[test]
        fn $name() {
            $name::run_example().unwrap();
        }
    };
}

example!(tntp_network, "../examples/tntp_network.rs");
example!(market_clearing, "../examples/market_clearing.rs");
example!(lower_bound, "../examples/lower_bound.rs");
example!(vcg_payments, "../examples/vcg_payments.rs");
example!(sioux_falls_benchmarks, "../examples/sioux_falls_benchmarks.rs");
example!(violation_sweep, "../examples/violation_sweep.rs");
