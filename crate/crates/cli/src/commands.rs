use anyhow::Context;
use nalgebra::Vector2;
use serde::Serialize;
use std::fs;
use std::path::Path;

use craterloc::camera::{refine_stereo, render_range_image, write_range_image, SensingNoiseModel};
use craterloc::detect::{detect as run_detector, rim_percent_detected, score_detections, write_detections_jsonl};
use craterloc::map::{
    front_arc, generate_crater_field, read_dem_asc, read_map_json, sample_rim, write_dem_asc, write_map_json,
    CraterMap, DemRaster,
};
use craterloc::sim::{
    derive_seed, histogram_svg, mc_runs_csv, monte_carlo, plan_trajectory, replay, run_csv, single_crater_scene,
    timing_harness, TrajectoryPlan,
};
use craterloc::Pose2;

use crate::config::RunConfig;
use crate::CliError;

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).context("serializing JSON")?;
    write(path, text + "\n")
}

fn out_dir(cfg: &RunConfig) -> Result<&Path, CliError> {
    fs::create_dir_all(&cfg.output_dir).with_context(|| format!("creating {}", cfg.output_dir.display()))?;
    Ok(&cfg.output_dir)
}

struct World {
    map: CraterMap,
    dem: DemRaster,
    start: Vector2<f64>,
    goal: Vector2<f64>,
}

fn load_world(cfg: &RunConfig) -> Result<World, CliError> {
    let (map, dem, start, goal) = match (&cfg.map, &cfg.dem) {
        (Some(m), Some(d)) => {
            let s = &cfg.scenario;
            (read_map_json(m)?, read_dem_asc(d)?, Vector2::from(s.start), Vector2::from(s.goal))
        }
        _ => {
            let s = cfg.scenario.build(cfg.seed)?;
            (s.map, s.dem, s.start, s.goal)
        }
    };
    let start = cfg.trajectory.start.map(Vector2::from).unwrap_or(start);
    let goal = cfg.trajectory.goal.map(Vector2::from).unwrap_or(goal);
    Ok(World { map, dem, start, goal })
}

fn plan(cfg: &RunConfig, w: &World) -> Result<TrajectoryPlan, CliError> {
    let t = &cfg.trajectory;
    Ok(plan_trajectory(&w.map, w.start, w.goal, t.traj_type, t.stop_spacing)?)
}

pub fn gen(cfg: &RunConfig, extent: Option<f64>) -> Result<(), CliError> {
    cfg.validate()?;
    let (map, dem) = match extent {
        Some(e) => generate_crater_field(cfg.seed, e, &cfg.scenario.field)?,
        None => {
            let s = cfg.scenario.build(cfg.seed)?;
            (s.map, s.dem)
        }
    };
    let dir = out_dir(cfg)?;
    write_map_json(&map, &dir.join("map.json"))?;
    write_dem_asc(&dem, &dir.join("dem.asc"))?;
    println!(
        "{} craters, {} landmarks, DEM {}x{} cells at {} m",
        map.craters.len(),
        map.landmarks().count(),
        dem.width(),
        dem.height(),
        dem.resolution()
    );
    for c in map.landmarks() {
        println!("landmark {:>3}: center ({:.2}, {:.2}) diameter {:.2} m depth {:.2} m", c.id, c.center.x, c.center.y, c.diameter, c.depth);
    }
    Ok(())
}

pub fn traj(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.validate()?;
    let world = load_world(cfg)?;
    let plan = plan(cfg, &world)?;
    let dir = out_dir(cfg)?;
    let stem = format!("trajectory_{}", plan.traj_type);
    write_json(&dir.join(format!("{stem}.json")), &plan)?;
    let mut csv = String::from("index,x,y,heading_deg\n");
    for (i, w) in plan.waypoints.iter().enumerate() {
        csv.push_str(&format!("{i},{},{},{}\n", w.x, w.y, w.heading.to_degrees()));
    }
    write(&dir.join(format!("{stem}.csv")), csv)?;
    println!(
        "{}: {} stops, {:.1} m, landmarks {:?}",
        plan.traj_type,
        plan.observation_stops.len(),
        plan.length(),
        plan.landmark_ids
    );
    Ok(())
}

#[derive(Serialize)]
struct RunSummary {
    seed: u64,
    traj_type: String,
    drift_p: f64,
    path_length_m: f64,
    final_error_m: f64,
    diverged: bool,
    updates: usize,
}

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.validate()?;
    let world = load_world(cfg)?;
    let plan = plan(cfg, &world)?;
    let result = replay(&plan, &world.map, &world.dem, &cfg.replay_config(), cfg.drift_p, cfg.seed)?;
    let dir = out_dir(cfg)?;
    let stem = format!("run_{}", plan.traj_type);
    write(&dir.join(format!("{stem}.csv")), run_csv(&result))?;
    let summary = RunSummary {
        seed: result.seed,
        traj_type: plan.traj_type.to_string(),
        drift_p: result.drift_p,
        path_length_m: plan.length(),
        final_error_m: result.final_error,
        diverged: result.diverged,
        updates: result.updates(),
    };
    write_json(&dir.join(format!("{stem}.json")), &summary)?;
    println!(
        "{} p={} seed {}: final error {:.2} m over {:.1} m, {} filter updates{}",
        summary.traj_type,
        summary.drift_p,
        summary.seed,
        summary.final_error_m,
        summary.path_length_m,
        summary.updates,
        if summary.diverged { " (diverged)" } else { "" }
    );
    Ok(())
}

pub fn mc(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.validate()?;
    let world = load_world(cfg)?;
    let plan = plan(cfg, &world)?;
    let rc = cfg.replay_config();
    let dir = out_dir(cfg)?;
    let mut summaries = Vec::new();
    println!("trajectory    drift  runs  avg(m)  std(m)  max(m)  >5m");
    for p in cfg.drift_rates() {
        let (summary, runs) = monte_carlo(&plan, &world.map, &world.dem, &rc, p, cfg.n_runs, cfg.seed)?;
        let stem = format!("mc_{}_p{}", plan.traj_type, p);
        write_json(&dir.join(format!("{stem}.json")), &summary)?;
        write(&dir.join(format!("{stem}.csv")), mc_runs_csv(&runs))?;
        let errors: Vec<f64> = runs.iter().map(|r| r.final_error).collect();
        let title = format!("{} final error, {}% drift, {} runs", plan.traj_type, p * 100.0, runs.len());
        write(&dir.join(format!("{stem}.svg")), histogram_svg(&errors, &title))?;
        println!(
            "{:<12} {:>6} {:>5} {:>7.2} {:>7.2} {:>7.2} {:>4.2}",
            plan.traj_type.to_string(),
            p,
            summary.runs,
            summary.avg_error_m,
            summary.stdev_error_m,
            summary.max_error_m,
            summary.frac_gt_5m
        );
        summaries.push(summary);
    }
    if summaries.len() > 1 {
        write_json(&dir.join(format!("mc_{}_sweep.json", plan.traj_type)), &summaries)?;
    }
    Ok(())
}

pub struct DetectOptions {
    pub range: f64,
    pub diameter: f64,
    pub pose: Option<(f64, f64, f64)>,
    pub sweep: Option<(f64, f64)>,
    pub step: f64,
    pub zero_noise: bool,
    pub dump_range: bool,
}

#[derive(Serialize)]
struct DetectReport {
    range_m: Option<f64>,
    pose: Pose2,
    q_score: Option<f64>,
    rim_percent: f64,
    detections: usize,
    detected_points: usize,
}

pub fn detect(cfg: &RunConfig, opts: &DetectOptions) -> Result<(), CliError> {
    cfg.validate()?;
    let rc = cfg.replay_config();
    let noise = if opts.zero_noise {
        SensingNoiseModel::noiseless(rc.noise.max_lit_range)
    } else {
        rc.noise.clone()
    };

    // (optional rim range, pose) per image, on either the configured world or a lone crater
    let (map, dem, shots): (CraterMap, DemRaster, Vec<(Option<f64>, Pose2)>) = match opts.pose {
        Some((x, y, h)) => {
            let w = load_world(cfg)?;
            (w.map, w.dem, vec![(None, Pose2::new(x, y, h.to_radians()))])
        }
        None => {
            let scene = single_crater_scene(opts.diameter)?;
            let ranges = match opts.sweep {
                Some((a, b)) => {
                    let n = ((b - a) / opts.step + 1e-9).floor() as usize;
                    (0..=n).map(|k| a + k as f64 * opts.step).collect()
                }
                None => vec![opts.range],
            };
            let shots = ranges.into_iter().map(|r| (Some(r), scene.view_pose(r))).collect();
            (scene.map, scene.dem, shots)
        }
    };

    let dir = out_dir(cfg)?;
    let sweep = opts.sweep.is_some();
    let mut reports = Vec::with_capacity(shots.len());
    for (i, (range, pose)) in shots.iter().enumerate() {
        let img = render_range_image(&dem, pose, &rc.camera, &noise, derive_seed(cfg.seed, i as u64))?;
        let img = refine_stereo(&img, rc.refine_start_range, rc.refine_consecutive_rows);
        let detections = run_detector(&img, &rc.detection);
        let q = score_detections(&detections, &map, pose, rc.filter.epsilon)?;
        let rim_percent = nearest_landmark(&map, pose)
            .map(|c| rim_percent_detected(&detections, &front_arc(&sample_rim(c, map.rim_sample_spacing), pose)))
            .unwrap_or(0.0);
        let tag = range.map(|r| format!("_{r}m")).unwrap_or_default();
        if opts.dump_range {
            let name = if sweep { format!("range{tag}.rngi") } else { "range.rngi".to_string() };
            write_range_image(&img, &dir.join(name))?;
        }
        if !sweep {
            let per: Vec<Option<f64>> = detections
                .iter()
                .map(|d| score_detections(std::slice::from_ref(d), &map, pose, rc.filter.epsilon))
                .collect::<Result<_, _>>()?;
            write_detections_jsonl(&detections, &per, &dir.join("detections.jsonl"))?;
        }
        reports.push(DetectReport {
            range_m: *range,
            pose: *pose,
            q_score: q,
            rim_percent,
            detections: detections.len(),
            detected_points: detections.iter().map(|d| d.world_points.len()).sum(),
        });
    }

    if sweep {
        let mut csv = String::from("range_m,q_score,rim_percent,detections,detected_points\n");
        for r in &reports {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                r.range_m.unwrap_or(f64::NAN),
                r.q_score.map(|q| q.to_string()).unwrap_or_default(),
                r.rim_percent,
                r.detections,
                r.detected_points
            ));
        }
        write(&dir.join("detect_sweep.csv"), csv)?;
        write_json(&dir.join("detect_sweep.json"), &reports)?;
    } else {
        write_json(&dir.join("detect_report.json"), &reports[0])?;
    }
    println!("range(m)  q_score  rim%   detections  points");
    for r in &reports {
        println!(
            "{:>8}  {:>7}  {:>5.1}  {:>10}  {:>6}",
            r.range_m.map(|x| format!("{x:.1}")).unwrap_or_else(|| "-".into()),
            r.q_score.map(|q| format!("{q:.3}")).unwrap_or_else(|| "none".into()),
            r.rim_percent,
            r.detections,
            r.detected_points
        );
    }
    Ok(())
}

fn nearest_landmark<'a>(map: &'a CraterMap, pose: &Pose2) -> Option<&'a craterloc::map::Crater> {
    map.landmarks()
        .min_by(|a, b| (a.center - pose.position()).norm().total_cmp(&(b.center - pose.position()).norm()))
}

pub fn bench(cfg: &RunConfig, particles: &[usize], repeats: usize) -> Result<(), CliError> {
    cfg.validate()?;
    if particles.is_empty() || particles.contains(&0) {
        return Err(CliError::Usage(anyhow::anyhow!("--particles needs positive counts")));
    }
    let report = timing_harness(&cfg.camera.model(), particles, repeats, cfg.seed)?;
    let dir = out_dir(cfg)?;
    write_json(&dir.join("bench.json"), &report)?;
    println!(
        "detect ({}x{}): mean {:.1} ms, max {:.1} ms",
        report.image_width, report.image_height, report.detect_mean_ms, report.detect_max_ms
    );
    for r in &report.rows {
        println!(
            "filter step N_s={:>4} ({} points): mean {:.2} ms, max {:.2} ms",
            r.num_particles, r.detection_points, r.mean_ms, r.max_ms
        );
    }
    Ok(())
}
