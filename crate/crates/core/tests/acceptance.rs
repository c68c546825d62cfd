//! Acceptance criteria. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits non-zero on any failure.

use std::f64::consts::{PI, TAU};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use futures::StreamExt;
use http_body_util::BodyExt;
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use roman_core::device;
use roman_core::kinematics::{
    chain_transmit, rack_transmit, ratchet_advance, pin_in_slot_position, Axis, BevelPair, GearRack, MotorSpec,
    PinInSlot, Ratchet, ShaftState, Sided, SpurPair, TransmissionChain, TransmissionStage,
};
use roman_core::profile::{make_template, Integrator, MotionProfile, TemplateKind, SIM_STEP_S};
use roman_core::registry::Registry;
use roman_core::server::{router, serve, AppState, StreamMessage};
use roman_core::testbed::{
    newtons_to_lbf, run_task, Scenario, Testbed, TestbedError, HAND_SANITIZER_TAG, JAR_LID_TAG, SPICE_BOTTLE_TAG,
    WHISK_TAG, WIRE_CUTTER_TAG,
};
use roman_core::TagId;
use tower::ServiceExt;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config::with_cases(cases),
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn rack_force() -> Check {
    let spec = MotorSpec::default();
    let out = rack_transmit(ShaftState::new(1.0, spec.tau_stall), &GearRack::new(0.005, true), 0.0)
        .map_err(|e| e.to_string())?;
    let lbf = newtons_to_lbf(out.f);
    ensure!(rel(out.f, 78.0) <= 1e-12, "force {} N", out.f);
    ensure!(rel(lbf, 17.52) <= 1e-3, "{lbf} lbf vs 17.52 lbf");
    Ok(format!("{:.1} N = {lbf:.2} lbf", out.f))
}

fn gearbox() -> Check {
    let chain = TransmissionChain::new(vec![TransmissionStage::Spur(SpurPair::new(0.005, 0.045))])
        .map_err(|e| e.to_string())?;
    let input = ShaftState::new(9.0, 0.1);
    let out = chain_transmit(input, &chain, 0.0).map_err(|e| e.to_string())?;
    ensure!(rel(out.effort().abs(), 0.9) <= 1e-12, "torque {}", out.effort());
    ensure!(rel(out.rate().abs(), 1.0) <= 1e-12, "speed {}", out.rate());
    Ok(format!("torque x{:.12}, speed /{:.12}", out.effort().abs() / 0.1, 9.0 / out.rate().abs()))
}

fn detach_feasibility() -> Check {
    let mut bed = Testbed::new(Scenario::builtin()).map_err(|e| e.to_string())?;
    let tag = TagId::parse(WIRE_CUTTER_TAG).unwrap();
    let pose = bed.scenario.object(&tag).map_err(|e| e.to_string())?.pose;
    ensure!(
        bed.gripper.detach_force_capacity > bed.gripper.magnet_pull,
        "capacity {} <= pull {}",
        bed.gripper.detach_force_capacity,
        bed.gripper.magnet_pull
    );
    ensure!((newtons_to_lbf(bed.gripper.magnet_pull) - 11.2).abs() < 0.05, "pull in lbf");
    bed.attach(&tag, pose).map_err(|e| e.to_string())?;
    ensure!(bed.read_rfid().ok() == Some(tag.clone()), "rfid read");
    bed.detach().map_err(|e| e.to_string())?;

    bed.gripper.detach_force_capacity = 49.0;
    bed.attach(&tag, pose).map_err(|e| e.to_string())?;
    match bed.detach() {
        Err(TestbedError::InsufficientDetachForce { .. }) => {}
        other => return Err(format!("weak gripper detach gave {other:?}")),
    }
    Ok("78 N > 49.8 N detaches; 49 N faults".into())
}

fn pin_in_slot() -> Check {
    let r = 0.015;
    let double = PinInSlot { crank_radius: r, sided: Sided::Double };
    let single = PinInSlot { crank_radius: r, sided: Sided::Single };
    let n = 10_000;
    let mut peak: f64 = 0.0;
    let mut worst_period: f64 = 0.0;
    for i in 0..n {
        let theta = -20.0 + 40.0 * i as f64 / n as f64;
        let x = pin_in_slot_position(theta, &double);
        ensure!(x.abs() <= r, "|x| = {} at {theta}", x.abs());
        ensure!(pin_in_slot_position(theta, &single) >= 0.0, "single-sided negative at {theta}");
        worst_period = worst_period.max((pin_in_slot_position(theta + TAU, &double) - x).abs());
        peak = peak.max(x.abs());
    }
    // a full period later the position repeats up to the rounding of theta + 2π
    ensure!(worst_period <= 1e-12 * r, "period error {worst_period}");
    let half = pin_in_slot_position(PI, &double);
    ensure!(half.abs() <= 1e-15, "not zero at π: {half}");
    let amp = pin_in_slot_position(PI / 2.0, &double);
    ensure!((amp - r).abs() <= 1e-12, "amplitude {amp}");
    ensure!(peak <= r, "sampled peak {peak}");
    Ok(format!("{n} samples, amplitude {amp}, period error {worst_period:.1e}"))
}

fn ratchet_suite() -> Check {
    let seqs = proptest::collection::vec(-0.01..0.01f64, 1..200);
    let mut rn = runner(1000);
    for case in 0..1000 {
        let steps = seqs.new_tree(&mut rn).map_err(|e| e.to_string())?.current();
        let locked = Ratchet::new(1);
        let mut released = Ratchet::new(1);
        released.released = true;
        let (mut x, mut y, mut sum) = (0.0f64, 0.0f64, 0.0f64);
        for dx in &steps {
            let next = ratchet_advance(&locked, x, *dx).position();
            ensure!(next >= x, "case {case}: locked ratchet backed up");
            x = next;
            y = ratchet_advance(&released, y, *dx).position();
            sum += dx;
        }
        ensure!((y - sum).abs() <= 1e-12, "case {case}: released {y} vs sum {sum}");
    }
    Ok("1000 sequences".into())
}

fn power_conservation() -> Check {
    let radius = || 0.002..0.05f64;
    let stage = proptest::prop_oneof![
        (radius(), radius()).prop_map(|(a, b)| TransmissionStage::Spur(SpurPair::new(a, b))),
        (radius(), radius()).prop_map(|(a, b)| TransmissionStage::Bevel(BevelPair::new(a, b, Axis::X))),
    ];
    let cases = (
        proptest::collection::vec(stage, 0..6),
        proptest::option::of(radius()),
        -50.0..50.0f64,
        -2.0..2.0f64,
    );
    let mut rn = runner(10_000);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let (mut stages, rack, omega, tau) = cases.new_tree(&mut rn).map_err(|e| e.to_string())?.current();
        if let Some(r) = rack {
            stages.push(TransmissionStage::Rack(GearRack::new(r, true)));
        }
        let chain = TransmissionChain::new(stages).map_err(|e| e.to_string())?;
        let input = ShaftState::new(omega, tau);
        let out = chain_transmit(input, &chain, 0.0).map_err(|e| e.to_string())?;
        if input.power() != 0.0 {
            worst = worst.max(rel(input.power().abs(), out.power().abs()));
        }
    }
    ensure!(worst <= 1e-9, "worst relative power error {worst}");
    Ok(format!("10000 chains, worst relative error {worst:.1e}"))
}

/// The squeeze / hold / full squeeze / release program, built from the
/// TwoWay template with editor operations.
fn wire_cut_program() -> Result<MotionProfile, String> {
    let e = |r: Result<(MotionProfile, usize), roman_core::profile::ProfileError>| r.map(|(p, _)| p).map_err(|e| e.to_string());
    let p = make_template(TemplateKind::TwoWay).with_name("wire cutter: squeeze, hold, cut, release");
    let p = e(p.move_keypoint(0, 0.0, 0.5))?;
    let p = e(p.move_keypoint(1, 0.6, 0.5))?;
    let p = e(p.move_keypoint(2, 0.6, 0.0))?;
    let p = e(p.move_keypoint(3, 2.5, 0.0))?;
    let p = p.add_keypoint(2.5, 1.0).map_err(|e| e.to_string())?;
    let p = e(p.move_keypoint(5, 4.0, 1.0))?;
    p.add_keypoint(4.0, -1.0).map_err(|e| e.to_string())
}

fn end_to_end() -> Check {
    let profile = wire_cut_program()?;
    let shipped: MotionProfile =
        serde_json::from_str(&std::fs::read_to_string(repo("profiles/wire_cutter.json")).unwrap()).unwrap();
    ensure!(profile.keypoints() == shipped.keypoints(), "edited program differs from profiles/wire_cutter.json");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let profile_path = dir.path().join("program.json");
    let csv_path = dir.path().join("trajectory.csv");
    std::fs::write(&profile_path, serde_json::to_string_pretty(&profile).unwrap()).map_err(|e| e.to_string())?;

    let started = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_roman"))
        .args(["simulate", "--object", WIRE_CUTTER_TAG, "--profile"])
        .arg(&profile_path)
        .arg("--out")
        .arg(&csv_path)
        .output()
        .map_err(|e| e.to_string())?
        .status;
    let wall = started.elapsed();
    ensure!(status.code() == Some(0), "roman simulate exited with {status}");
    ensure!(wall < Duration::from_secs(5), "took {wall:?}");

    let mut rdr = csv::Reader::from_path(&csv_path).map_err(|e| e.to_string())?;
    let rows: Vec<(f64, f64, f64, bool)> = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            let f = |i: usize| r[i].parse::<f64>().unwrap();
            (f(0), f(1), f(3), &r[5] == "1")
        })
        .collect();
    let phase = |a: f64, b: f64| rows.iter().filter(move |r| r.0 >= a && r.0 < b);

    // phase 1: partial squeeze closes the handles but does not cut
    let squeezed = phase(0.0, 0.6).next_back().unwrap().2;
    ensure!(squeezed > 0.0, "no squeeze");
    ensure!(!phase(0.0, 0.6).any(|r| r.3), "cut during the partial squeeze");
    // phase 2: hold with zero output motion
    let hold: Vec<_> = phase(0.6, 2.5).collect();
    ensure!(hold.iter().all(|r| r.1 == 0.0 && r.2 == hold[0].2), "output moved during the hold");
    ensure!(!hold.iter().any(|r| r.3), "cut during the hold");
    // phase 3: full squeeze cuts
    ensure!(phase(2.5, 4.0).any(|r| r.3), "no cut in the full squeeze");
    // phase 4: release opens the handles again
    let last = rows.last().unwrap();
    ensure!(last.2 < phase(2.5, 4.0).next_back().unwrap().2, "handles did not reopen");
    ensure!(last.3, "final row not completed");

    let t_cut = rows.iter().find(|r| r.3).unwrap().0;
    Ok(format!("cut at t = {t_cut:.2} s, hold at {:.4} m, wall {:.0} ms", hold[0].2, wall.as_secs_f64() * 1e3))
}

fn catalog() -> Check {
    let scenario = Scenario::builtin();
    let files = [
        (WIRE_CUTTER_TAG, "wire_cutter"),
        (HAND_SANITIZER_TAG, "hand_sanitizer"),
        (JAR_LID_TAG, "jar_lid"),
        (WHISK_TAG, "whisk"),
        (SPICE_BOTTLE_TAG, "spice_bottle"),
    ];
    ensure!(scenario.objects.len() == files.len(), "catalog size {}", scenario.objects.len());
    let mut times = Vec::new();
    for (tag, file) in files {
        let object = scenario.object(&TagId::parse(tag).unwrap()).map_err(|e| e.to_string())?;
        let text = std::fs::read_to_string(repo(&format!("profiles/{file}.json"))).map_err(|e| format!("{file}: {e}"))?;
        let profile: MotionProfile = serde_json::from_str(&text).map_err(|e| format!("{file}: {e}"))?;
        let out = run_task(object, &profile, &scenario.motor).map_err(|e| e.to_string())?;
        ensure!(out.completed, "{file} does not complete");
        let zero = MotionProfile::constant("zero", profile.duration_s(), 0.0).unwrap();
        ensure!(!run_task(object, &zero, &scenario.motor).map_err(|e| e.to_string())?.completed, "{file} completes at rest");
        times.push(format!("{file} {:.2}s", out.t_complete.unwrap()));
    }
    Ok(times.join(", "))
}

async fn protocol_async() -> Check {
    // device golden bytes
    let golden = MotionProfile::new(
        "",
        2.5,
        true,
        vec![roman_core::Keypoint::new(0.0, -1.0), roman_core::Keypoint::new(2.0, 0.5)],
    )
    .unwrap();
    let bytes = device::encode(&golden).map_err(|e| e.to_string())?;
    ensure!(device::to_hex(&bytes) == "0200000081d00740c40901", "golden bytes {}", device::to_hex(&bytes));
    let back = device::decode(&bytes).map_err(|e| e.to_string())?;
    ensure!(device::encode(&back).unwrap() == bytes, "golden round-trip");

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let state = AppState::new(Registry::open(dir.path()).map_err(|e| e.to_string())?, Scenario::builtin());
    let call = |method: &str, uri: &str, body: Option<String>| {
        let state = state.clone();
        let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
        let req = req.body(body.map(Body::from).unwrap_or_else(Body::empty)).unwrap();
        async move {
            let resp = router(state).oneshot(req).await.unwrap();
            let status = resp.status();
            (status, resp.into_body().collect().await.unwrap().to_bytes())
        }
    };

    let (status, body) = call("GET", "/api/templates", None).await;
    let templates: Vec<MotionProfile> = serde_json::from_slice(&body).map_err(|e| e.to_string())?;
    ensure!(status == StatusCode::OK && templates.len() == 4, "templates: {status}, {}", templates.len());
    for t in &templates {
        t.to_doc().validate().map_err(|e| e.to_string())?;
    }

    let uri = format!("/api/profiles/{WIRE_CUTTER_TAG}");
    let program = wire_cut_program()?;
    let (status, _) = call("PUT", &uri, Some(serde_json::to_string(&program).unwrap())).await;
    ensure!(status == StatusCode::NO_CONTENT, "PUT {status}");
    let (status, body) = call("GET", &uri, None).await;
    ensure!(status == StatusCode::OK, "GET {status}");
    ensure!(serde_json::from_slice::<MotionProfile>(&body).ok() == Some(program), "GET differs from PUT");

    let start = serde_json::json!({ "tag_id": WIRE_CUTTER_TAG }).to_string();
    let (status, _) = call("POST", "/api/test/start", Some(start.clone())).await;
    ensure!(status == StatusCode::OK, "start {status}");
    let (status, _) = call("POST", "/api/test/start", Some(start)).await;
    ensure!(status == StatusCode::CONFLICT, "duplicate start gave {status}");

    // live socket for the tick rate
    let (addr_tx, addr_rx) = tokio::sync::oneshot::channel();
    tokio::spawn(serve(state.clone(), "127.0.0.1:0".parse().unwrap(), |a| addr_tx.send(a).unwrap(), std::future::pending()));
    let addr = addr_rx.await.map_err(|e| e.to_string())?;
    let whisk = serde_json::json!({ "tag_id": WHISK_TAG, "profile": make_template(TemplateKind::EndlessRotation) }).to_string();
    let (status, body) = call("POST", "/api/test/start", Some(whisk)).await;
    ensure!(status == StatusCode::OK, "whisk start {status}");
    let id: serde_json::Value = serde_json::from_slice(&body).unwrap();
    let url = format!("ws://{addr}/api/test/{}/stream", id["session_id"].as_str().unwrap());
    let (mut ws, _) = tokio_tungstenite::connect_async(url).await.map_err(|e| e.to_string())?;
    let t0 = Instant::now();
    let mut ticks = 0;
    while t0.elapsed() < Duration::from_secs(1) {
        let Ok(Some(Ok(msg))) = tokio::time::timeout(Duration::from_millis(200), ws.next()).await else {
            return Err("telemetry stream stalled".into());
        };
        if let tokio_tungstenite::tungstenite::Message::Text(t) = msg {
            if let Ok(StreamMessage::Telemetry(_)) = serde_json::from_str(t.as_str()) {
                ticks += 1;
            }
        }
    }
    ensure!((40..=60).contains(&ticks), "{ticks} ticks in 1 s");
    Ok(format!("golden bytes, 4 templates, PUT/GET, 409, {ticks} ticks/s"))
}

fn protocol() -> Check {
    tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()
        .map_err(|e| e.to_string())?
        .block_on(protocol_async())
}

fn convergence() -> Check {
    let spec = MotorSpec::default();
    let mut worst: f64 = 0.0;
    for kind in TemplateKind::ALL {
        let p = make_template(kind);
        let coarse = Integrator::default().motor_angle(&p, &spec, |_| 0.0).map_err(|e| e.to_string())?;
        let fine = Integrator { dt: SIM_STEP_S / 2.0, ..Integrator::default() }
            .motor_angle(&p, &spec, |_| 0.0)
            .map_err(|e| e.to_string())?;
        let (a, b) = (coarse.last().unwrap().theta, fine.last().unwrap().theta);
        // templates that return to the start have a near-zero final angle; scale by one step of travel
        let scale = a.abs().max(b.abs()).max(spec.omega_noload * SIM_STEP_S);
        let e = (a - b).abs() / scale;
        ensure!(e < 1e-3, "{kind:?}: {a} vs {b}");
        worst = worst.max(e);
    }
    Ok(format!("worst relative change {worst:.1e}"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("rack force at stall", rack_force),
        ("9:1 gearbox", gearbox),
        ("detach feasibility", detach_feasibility),
        ("pin-in-slot properties", pin_in_slot),
        ("ratchet property suite", ratchet_suite),
        ("power conservation", power_conservation),
        ("end-to-end wire cut", end_to_end),
        ("five-object catalog", catalog),
        ("protocol conformance", protocol),
        ("integration convergence", convergence),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
