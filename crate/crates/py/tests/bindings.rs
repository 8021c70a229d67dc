use pyo3::prelude::*;
use pyo3::types::PyDict;

#[test]
fn module_round_trips_through_python() {
    Python::initialize();
    Python::attach(|py| {
        let m = pyo3::wrap_pymodule!(irs_thz_py::irs_thz_py)(py);
        let globals = PyDict::new(py);
        globals.set_item("irs", m).unwrap();
        let code = c"
rho = irs.edge_energy(32, 64)
ok = abs(irs.worst_error(32, 64) - (1 - rho)) < 1e-12
cb = irs.Codebook(32, 96, 3)
leaf, count = cb.search(0.3)
cfg = irs.Config('trials = 3')
try:
    irs.Config('n_t = 0')
    rejected = False
except ValueError:
    rejected = True
quant = irs.run_experiment('quant-table', cfg)
";
        py.run(code, Some(&globals), None).unwrap();
        let get = |k: &str| globals.get_item(k).unwrap().unwrap();
        assert!(get("ok").extract::<bool>().unwrap());
        assert!(get("rejected").extract::<bool>().unwrap());
        assert!(get("leaf").extract::<usize>().unwrap() < 96);
        assert!(get("quant").extract::<String>().unwrap().starts_with("N_a,K,e_worst,e_aver\n"));
    });
}
