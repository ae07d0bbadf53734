use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use relqi_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 256];
    unsafe {
        relqi_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn scalar_entry_points() {
    let mut g = 0.0;
    assert_eq!(unsafe { relqi_gamma_parameter(1.0, 1.0, 0.6, &mut g) }, RelqiStatus::Ok);
    assert!((g - 1.0 / 3.0).abs() < 1e-14);

    let mut beta = 0.0;
    assert_eq!(unsafe { relqi_beta_for_gamma(g, 1.0, &mut beta) }, RelqiStatus::Ok);
    assert!((beta - 0.6).abs() < 1e-12);

    let (mut s, mut pe) = (0.0, 0.0);
    assert_eq!(unsafe { relqi_spin_point(1.2, 0.25, 0.6, 8, &mut s, &mut pe) }, RelqiStatus::Ok);
    assert!(s > 0.0 && pe > 0.0 && pe < 0.5);

    let mut ratio = 0.0;
    assert_eq!(unsafe { relqi_doppler_ratio(100.0, 0.1, 1.0, 0.5, 6, &mut ratio) }, RelqiStatus::Ok);
    assert!((ratio / 3.0 - 1.0).abs() < 0.05);

    let mut c = 0.0;
    assert_eq!(unsafe { relqi_singlet_concurrence(1e-4, 0.9, 4, &mut c) }, RelqiStatus::Ok);
    assert!((c - 1.0).abs() < 1e-4);

    let mut p = 0.0;
    assert_eq!(unsafe { relqi_circular_pair_error(1.0, 0.005, 0.01, 6, &mut p) }, RelqiStatus::Ok);
    assert!((p / 2.5e-5 - 1.0).abs() < 0.1);
}

#[test]
fn errors_are_reported() {
    let mut g = 0.0;
    assert_eq!(unsafe { relqi_gamma_parameter(1.0, 1.0, 1.0, &mut g) }, RelqiStatus::Domain);
    assert!(last_error().contains("beta"), "{}", last_error());
    assert_eq!(unsafe { relqi_gamma_parameter(1.0, 1.0, 0.5, ptr::null_mut()) }, RelqiStatus::NullPointer);
    let mut h: *mut RelqiChannel = ptr::null_mut();
    assert_eq!(unsafe { relqi_channel_decoherence(2.5, &mut h) }, RelqiStatus::Domain);
    assert!(h.is_null());
    let len = unsafe { relqi_last_error_message(ptr::null_mut(), 0) };
    assert!(len > 0);
}

#[test]
fn packet_handles() {
    let mut up: *mut RelqiSpinPacket = ptr::null_mut();
    let mut moved: *mut RelqiSpinPacket = ptr::null_mut();
    unsafe {
        assert_eq!(relqi_spin_packet_gaussian(0.5, 1.0, 6, 1, &mut up), RelqiStatus::Ok);
        let (mut re, mut im) = ([0.0; 4], [0.0; 4]);
        assert_eq!(relqi_spin_packet_density(up, re.as_mut_ptr(), im.as_mut_ptr()), RelqiStatus::Ok);
        assert!((re[0] - 1.0).abs() < 1e-10 && re[3].abs() < 1e-10);
        assert_eq!(relqi_spin_packet_boost(up, 0.8, 0.3, &mut moved), RelqiStatus::Ok);
        let mut s = 0.0;
        assert_eq!(relqi_spin_packet_entropy(moved, &mut s), RelqiStatus::Ok);
        assert!(s > 0.0);
        assert_eq!(relqi_spin_packet_boost(up, 1.5, 0.3, &mut moved), RelqiStatus::Domain);
        assert_eq!(relqi_spin_packet_entropy(ptr::null(), &mut s), RelqiStatus::NullPointer);
        relqi_spin_packet_free(moved);
        relqi_spin_packet_free(up);
        relqi_spin_packet_free(ptr::null_mut());
    }
}

#[test]
fn channel_handles() {
    unsafe {
        let mut ch: *mut RelqiChannel = ptr::null_mut();
        assert_eq!(relqi_channel_decoherence(0.2, &mut ch), RelqiStatus::Ok);
        let (re, im) = ([1.0, 0.0, 0.0, 0.0], [0.0; 4]);
        let (mut ore, mut oim) = ([0.0; 4], [0.0; 4]);
        assert_eq!(
            relqi_channel_apply(ch, re.as_ptr(), im.as_ptr(), ore.as_mut_ptr(), oim.as_mut_ptr()),
            RelqiStatus::Ok
        );
        assert!((ore[0] - 0.99).abs() < 1e-15 && (ore[3] - 0.01).abs() < 1e-15);
        let mut min = -1.0;
        assert_eq!(relqi_channel_min_choi_eigenvalue(ch, &mut min), RelqiStatus::Ok);
        assert!(min >= -1e-12);
        let bad = [2.0, 0.0, 0.0, 0.0];
        assert_eq!(
            relqi_channel_apply(ch, bad.as_ptr(), im.as_ptr(), ore.as_mut_ptr(), oim.as_mut_ptr()),
            RelqiStatus::InvalidState
        );
        relqi_channel_free(ch);

        let mut t: *mut RelqiChannel = ptr::null_mut();
        assert_eq!(relqi_channel_transpose(&mut t), RelqiStatus::Ok);
        assert_eq!(relqi_channel_min_choi_eigenvalue(t, &mut min), RelqiStatus::Ok);
        assert!((min + 1.0).abs() < 1e-12);
        relqi_channel_free(t);
    }
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/relqi.h")).unwrap();
    for name in [
        "relqi_last_error_message",
        "relqi_gamma_parameter",
        "relqi_beta_for_gamma",
        "relqi_spin_point",
        "relqi_spin_packet_gaussian",
        "relqi_spin_packet_boost",
        "relqi_spin_packet_density",
        "relqi_spin_packet_entropy",
        "relqi_spin_packet_free",
        "relqi_circular_pair_error",
        "relqi_doppler_ratio",
        "relqi_singlet_concurrence",
        "relqi_channel_decoherence",
        "relqi_channel_transpose",
        "relqi_channel_apply",
        "relqi_channel_min_choi_eigenvalue",
        "relqi_channel_free",
        "typedef struct RelqiSpinPacket RelqiSpinPacket",
        "RELQI_STATUS_OK = 0",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}

/// Compiles `tests/c/smoke.c` against the header and the static library.
#[test]
fn c_program_links_and_runs() {
    let exe = std::env::current_exe().unwrap();
    // target/<profile>/deps/<test binary>
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("librelqi_ffi.a");
    if !lib.exists() {
        eprintln!("skipping C smoke test: {} not built", lib.display());
        return;
    }
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let out = tempfile::tempdir().unwrap();
    let bin = out.path().join("smoke");
    let status = Command::new("cc")
        .arg(dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status();
    let Ok(status) = status else {
        eprintln!("skipping C smoke test: no C compiler");
        return;
    };
    assert!(status.success(), "C compilation failed");
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok");
}
