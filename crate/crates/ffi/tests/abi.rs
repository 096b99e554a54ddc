use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use bistable_net_ffi::*;

fn last_error() -> String {
    let p = bn_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn unit_network(topology: BnTopology, n: usize, k: f64) -> *mut BnNetwork {
    let mut net = ptr::null_mut();
    let s = unsafe { bn_network_new_pwa(1.0, 1.0, 1.0, 1.0, 0.45, 0.1, topology, n, k, &mut net) };
    assert_eq!(s, BnStatus::Ok);
    net
}

#[test]
fn enumerates_through_handles() {
    let net = unit_network(BnTopology::AllToAll, 5, 0.001);
    let mut size = 0;
    assert_eq!(unsafe { bn_network_size(net, &mut size) }, BnStatus::Ok);
    assert_eq!(size, 5);

    let mut eq = ptr::null_mut();
    assert_eq!(unsafe { bn_equilibria_enumerate(net, 1e-9, &mut eq) }, BnStatus::Ok);
    let count = unsafe { bn_equilibria_count(eq) };
    assert_eq!(count, 243);

    let mut stable = 0;
    for i in 0..count {
        let mut state = [0.0; 10];
        let mut domain = [0i8; 5];
        let mut st = BnStability::Marginal;
        let s = unsafe { bn_equilibria_get(eq, i, state.as_mut_ptr(), 10, domain.as_mut_ptr(), 5, &mut st) };
        assert_eq!(s, BnStatus::Ok);
        let mut dx = [1.0; 10];
        assert_eq!(
            unsafe { bn_vector_field(net, state.as_ptr(), dx.as_mut_ptr(), 10) },
            BnStatus::Ok
        );
        assert!(dx.iter().all(|v| v.abs() < 1e-9));
        if domain.iter().all(|&d| d != 0) {
            assert_eq!(st, BnStability::Stable);
            stable += 1;
        }
    }
    assert_eq!(stable, 32);

    let s = unsafe { bn_equilibria_get(eq, count, ptr::null_mut(), 0, ptr::null_mut(), 0, ptr::null_mut()) };
    assert_eq!(s, BnStatus::InvalidArgument);
    assert!(last_error().contains("out of range"));

    unsafe {
        bn_equilibria_free(eq);
        bn_network_free(net);
    }
}

#[test]
fn simulates_and_copies_samples() {
    let net = unit_network(BnTopology::Line, 2, 0.5);
    let x0 = [0.9, 0.1, 0.5, 0.2];
    let mut traj = ptr::null_mut();
    let s = unsafe { bn_simulate(net, x0.as_ptr(), 4, 50.0, 0.1, BnMethod::Rk45, &mut traj) };
    assert_eq!(s, BnStatus::Ok);
    let (mut samples, mut dim) = (0, 0);
    assert_eq!(
        unsafe { bn_trajectory_shape(traj, &mut samples, &mut dim) },
        BnStatus::Ok
    );
    assert_eq!((samples, dim), (501, 4));
    let mut times = vec![0.0; samples];
    let mut states = vec![0.0; samples * dim];
    let s = unsafe { bn_trajectory_copy(traj, times.as_mut_ptr(), samples, states.as_mut_ptr(), states.len()) };
    assert_eq!(s, BnStatus::Ok);
    assert_eq!(times[samples - 1], 50.0);
    assert_eq!(&states[..4], &x0);

    let s = unsafe { bn_trajectory_copy(traj, times.as_mut_ptr(), 3, ptr::null_mut(), 0) };
    assert_eq!(s, BnStatus::InvalidArgument);
    unsafe {
        bn_trajectory_free(traj);
        bn_network_free(net);
    }
}

#[test]
fn reports_errors_by_code() {
    let mut net = ptr::null_mut();
    let s = unsafe { bn_network_new_pwa(1.0, 1.0, 1.0, 1.0, 0.45, -0.1, BnTopology::Line, 2, 1.0, &mut net) };
    assert_eq!(s, BnStatus::InvalidArgument);
    assert!(net.is_null());
    assert!(last_error().contains("delta"), "{}", last_error());

    let s = unsafe { bn_network_new_pwa(1.0, 1.0, 1.0, 1.0, 0.45, 0.1, BnTopology::Line, 2, 1.0, ptr::null_mut()) };
    assert_eq!(s, BnStatus::NullPointer);

    let json = CString::new("{ \"model\": 3 }").unwrap();
    assert_eq!(
        unsafe { bn_network_from_json(json.as_ptr(), &mut net) },
        BnStatus::InvalidConfig
    );

    let line = unit_network(BnTopology::Line, 3, 1.0);
    let (mut kl, mut ks) = (0.0, 0.0);
    assert_eq!(unsafe { bn_thresholds(line, &mut kl, &mut ks) }, BnStatus::Unsupported);
    let x0 = [2.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let mut traj = ptr::null_mut();
    let s = unsafe { bn_simulate(line, x0.as_ptr(), 6, 1.0, 0.1, BnMethod::Rk4, &mut traj) };
    assert_eq!(s, BnStatus::InvalidArgument);
    assert!(last_error().contains("invariant box"), "{}", last_error());
    unsafe { bn_network_free(line) };
}

#[test]
fn json_config_and_thresholds() {
    let json = CString::new(
        r#"{"model": {"gamma1": 1, "gamma2": 1, "v1": 1, "v2": 1,
                      "g1": {"kind": "pwa", "theta": 0.45, "delta": 0.1},
                      "g2": {"kind": "identity"}},
            "topology": {"kind": "all_to_all", "n": 5, "k": 2.0}}"#,
    )
    .unwrap();
    let mut net = ptr::null_mut();
    assert_eq!(unsafe { bn_network_from_json(json.as_ptr(), &mut net) }, BnStatus::Ok);
    let (mut kl, mut ks) = (0.0, 0.0);
    assert_eq!(unsafe { bn_thresholds(net, &mut kl, &mut ks) }, BnStatus::Ok);
    assert!((kl - 1.8).abs() < 1e-12 && (ks - 0.6).abs() < 1e-12);
    unsafe { bn_network_free(net) };
}

#[test]
fn header_compiles_and_links_from_c() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header_dir = root.join("include");
    let target = std::env::var_os("CARGO_TARGET_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| root.join("../../target"));
    let profile = if cfg!(debug_assertions) { "debug" } else { "release" };
    let lib = target.join(profile).join("libbistable_net_ffi.a");
    if Command::new("cc").arg("--version").output().is_err() || !lib.exists() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let dir = tempfile::TempDir::new().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&header_dir)
        .arg(root.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, "3 1.800000 0.600000\n2 message\n");
}
