// ivuscal: tracked-IVUS probe calibration toolkit.
//
// Subcommands: phantom-gen, simulate, calibrate, evaluate, reconstruct.
// Exit codes: 0 success, 1 usage error, 2 data/parse error, 3 numerical
// failure (degenerate geometry, or non-convergence under --strict).

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ivuscal/calibration.hpp"
#include "ivuscal/io.hpp"
#include "ivuscal/phantom.hpp"
#include "ivuscal/recon.hpp"
#include "ivuscal/sim.hpp"

namespace fs = std::filesystem;
using namespace ivuscal;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

std::string fmt9(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 9);
  return std::string(buf, res.ptr);
}

struct PhantomGenOpts {
  std::string out = "phantom.csv";
  std::vector<double> angles_deg = {60.0, 90.0, 120.0};
  double radius_mm = 65.0;
  std::vector<double> lengths_mm = {10.0, 30.0, 50.0, 20.0, 40.0};
  std::vector<double> offsets_mm = {-10.0, -5.0, 0.0, 5.0, 10.0};
};

int run_phantom_gen(const PhantomGenOpts& opts) {
  PhantomSpec spec;
  spec.cluster_angles_deg = opts.angles_deg;
  spec.needles_per_cluster = static_cast<int>(opts.lengths_mm.size());
  spec.needle_lengths_mm = opts.lengths_mm;
  spec.cavity_radius_mm = opts.radius_mm;
  spec.axial_offsets_mm = opts.offsets_mm;

  const PhantomModel model = build_phantom(spec);
  save_phantom(model, opts.out);
  std::cout << "wrote " << opts.out << " (" << model.landmark_count() << " landmarks)\n";
  return kExitOk;
}

struct SimulateOpts {
  std::string phantom_path;
  std::uint64_t seed = 0;
  int poses = 150;
  double sweep_deg = 360.0;
  double noise_px = 0.0;
  double noise_pose_mm = 0.0;
  double noise_pose_deg = 0.0;
  double depth_mm = 90.0;
  double slab_mm = 1.0;
  double start_az_deg = 0.0;
  std::vector<double> cluster_az_deg;
  int frame_width = 680;
  int frame_height = 480;
  bool write_frames = true;
  std::string out_dir = ".";
  std::string gt_out;
};

int run_simulate(const SimulateOpts& opts) {
  const PhantomModel phantom = load_phantom(opts.phantom_path);

  AcquisitionSpec spec;
  spec.pose_count = opts.poses;
  spec.sweep_deg = opts.sweep_deg;
  spec.depth_mm = opts.depth_mm;
  spec.pixel_noise_sigma_px = opts.noise_px;
  spec.pose_translation_noise_sigma_mm = opts.noise_pose_mm;
  spec.pose_rotation_noise_sigma_deg = opts.noise_pose_deg;
  spec.slab_half_thickness_mm = opts.slab_mm;
  spec.seed = opts.seed;
  spec.image_width_px = opts.frame_width;
  spec.start_azimuth_deg = opts.start_az_deg;
  spec.extra_azimuths_deg = opts.cluster_az_deg;

  // Decorrelate the ground-truth draw from the acquisition's own stream.
  const CalibrationParams gt =
      random_calibration(CalibrationRanges{}, opts.seed ^ 0x9e3779b97f4a7c15ULL);
  const TrackedSequence seq = simulate_acquisition(phantom, gt, spec);

  const fs::path out_dir(opts.out_dir);
  fs::create_directories(out_dir);
  save_poses(seq.poses, out_dir / "poses.csv");
  save_observations(seq.observations, out_dir / "observations.csv");

  CalibrationResult gt_result;
  gt_result.params = gt;
  gt_result.matrix = calibration_matrix(gt);
  gt_result.final_error_mm2 = 0.0;
  gt_result.iterations = 0;
  gt_result.converged = true;
  const fs::path gt_path =
      opts.gt_out.empty() ? out_dir / "gt_calib.txt" : fs::path(opts.gt_out);
  save_calibration(gt_result, gt_path);

  if (opts.write_frames) {
    fs::create_directories(out_dir / "frames");
    for (const auto& tp : seq.true_poses) {
      const FrameImage frame =
          render_frame(phantom, gt, tp.pose, opts.frame_width, opts.frame_height, opts.depth_mm,
                       opts.slab_mm, seq.world_from_phantom.value());
      save_pgm(frame, out_dir / "frames" / frame_file_name(tp.frame));
    }
  }

  Manifest manifest;
  manifest.poses_path = "poses.csv";
  manifest.observations_path = "observations.csv";
  manifest.frames_dir = opts.write_frames ? "frames" : "";
  manifest.depth_mm = opts.depth_mm;
  manifest.notes = "synthetic acquisition, seed " + std::to_string(opts.seed);
  save_manifest(manifest, out_dir / "manifest.txt");

  std::cout << "poses " << seq.poses.size() << "\n"
            << "observations " << seq.observations.size() << "\n"
            << "out_dir " << out_dir.string() << "\n";
  return kExitOk;
}

struct CalibrateOpts {
  std::string phantom_path;
  std::string observations_path;
  std::string poses_path;
  std::string out;
  double lr = 0.05;
  double epsilon = 1e-4;
  int max_iters = 10000;
  int plateau_window = 200;
  double plateau_rel_tol = 1e-9;
  int restarts = 0;
  std::uint64_t restart_seed = 0;
  bool strict = false;
  bool icp = false;
};

int run_calibrate(const CalibrateOpts& opts) {
  const CalibrationProblem problem =
      CalibrationProblem::assemble(load_phantom(opts.phantom_path),
                                   load_observations(opts.observations_path),
                                   load_poses(opts.poses_path));

  OptimizerConfig config;
  config.learning_rate = opts.lr;
  config.epsilon_mm2 = opts.epsilon;
  config.max_iters = opts.max_iters;
  config.plateau_window = opts.plateau_window;
  config.plateau_rel_tol = opts.plateau_rel_tol;
  config.restarts = opts.restarts;
  config.restart_seed = opts.restart_seed;
  config.registration =
      opts.icp ? RegistrationMethod::icp_nearest : RegistrationMethod::kabsch_paired;

  const CalibrationResult result = solve(problem, config);
  save_calibration(result, opts.out);

  std::cout << "iterations " << result.iterations << "\n"
            << "final_error_mm2 " << fmt9(result.final_error_mm2) << "\n"
            << "rmse_mm " << fmt9(std::sqrt(result.final_error_mm2)) << "\n"
            << "converged " << (result.converged ? "true" : "false") << "\n";

  if (opts.strict && !result.converged) {
    std::cerr << "error: did not converge within " << opts.max_iters << " iterations\n";
    return kExitNumerical;
  }
  return kExitOk;
}

struct EvaluateOpts {
  std::string calib_path;
  std::string phantom_path;
  std::string observations_path;
  std::string poses_path;
  double depth_mm = 0.0;
  bool icp = false;
};

int run_evaluate(const EvaluateOpts& opts) {
  const CalibrationResult calib = load_calibration(opts.calib_path);
  const CalibrationProblem problem =
      CalibrationProblem::assemble(load_phantom(opts.phantom_path),
                                   load_observations(opts.observations_path),
                                   load_poses(opts.poses_path));
  const RegistrationMethod method =
      opts.icp ? RegistrationMethod::icp_nearest : RegistrationMethod::kabsch_paired;
  const double rmse = landmark_rmse(problem, calib.params, method);
  std::cout << fmt9(opts.depth_mm) << ',' << fmt9(rmse) << ',' << problem.observations.size()
            << "\n";
  return kExitOk;
}

struct ReconstructOpts {
  std::string calib_path;
  std::string poses_path;
  std::string frames_dir;
  std::string out_prefix;
  double spacing_mm = 0.25;
  double padding_mm = 5.0;
  std::string compound = "mean";
};

int run_reconstruct(const ReconstructOpts& opts) {
  const CalibrationResult calib = load_calibration(opts.calib_path);
  const std::vector<TimedPose> poses = load_poses(opts.poses_path);
  const Compounding mode = compounding_from_string(opts.compound);

  std::vector<FrameImage> frames;
  frames.reserve(poses.size());
  for (const auto& tp : poses) {
    const fs::path frame_path = fs::path(opts.frames_dir) / frame_file_name(tp.frame);
    FrameImage frame = load_pgm(frame_path);
    frame.pose = tp.pose;
    frames.push_back(std::move(frame));
  }

  const VolumePlan plan = plan_volume(frames, calib.matrix, opts.spacing_mm, opts.padding_mm);
  const PasteResult pasted = paste_frames(frames, calib.matrix, plan, mode);
  save_volume(pasted.volume, opts.out_prefix);

  std::cout << "dims " << plan.dims[0] << ' ' << plan.dims[1] << ' ' << plan.dims[2] << "\n"
            << "spacing_mm " << fmt9(opts.spacing_mm) << "\n"
            << "pasted_pixels " << pasted.pasted_pixels << "\n"
            << "dropped_pixels " << pasted.dropped_pixels << "\n"
            << "wrote " << opts.out_prefix << ".meta " << opts.out_prefix << ".raw\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tracked-IVUS probe calibration, simulation and volume reconstruction"};
  app.require_subcommand(1);

  PhantomGenOpts pg;
  auto* phantom_gen = app.add_subcommand("phantom-gen", "Write a phantom landmark CSV");
  phantom_gen->add_option("--out", pg.out, "Output CSV path")->capture_default_str();
  phantom_gen->add_option("--angles", pg.angles_deg, "Cluster azimuths (deg)")
      ->capture_default_str();
  phantom_gen->add_option("--radius-mm", pg.radius_mm, "Cavity internal radius (mm)")
      ->capture_default_str();
  phantom_gen->add_option("--lengths", pg.lengths_mm, "Needle lengths within a cluster (mm)")
      ->capture_default_str();
  phantom_gen->add_option("--offsets", pg.offsets_mm, "Axial tip offsets within a cluster (mm)")
      ->capture_default_str();

  SimulateOpts sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic tracked acquisition");
  simulate->add_option("--phantom", sim.phantom_path, "Phantom CSV")->required();
  simulate->add_option("--seed", sim.seed, "RNG seed")->capture_default_str();
  simulate->add_option("--poses", sim.poses, "Sweep pose count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  simulate->add_option("--sweep-deg", sim.sweep_deg, "Total probe rotation (deg)")
      ->capture_default_str();
  simulate->add_option("--noise-px", sim.noise_px, "Pixel noise sigma (px)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  simulate->add_option("--noise-pose-mm", sim.noise_pose_mm, "Pose translation noise sigma (mm)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  simulate->add_option("--noise-pose-deg", sim.noise_pose_deg, "Pose rotation noise sigma (deg)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  simulate->add_option("--depth-mm", sim.depth_mm, "Ultrasound depth setting (mm)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  simulate->add_option("--slab-mm", sim.slab_mm, "Slab half-thickness for visibility (mm)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  simulate->add_option("--start-az", sim.start_az_deg, "Sweep start azimuth (deg)")
      ->capture_default_str();
  simulate->add_option("--cluster-az", sim.cluster_az_deg,
                       "Extra pose azimuths appended after the sweep (deg)");
  simulate->add_option("--frame-width", sim.frame_width, "Rendered frame width (px)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  simulate->add_option("--frame-height", sim.frame_height, "Rendered frame height (px)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  simulate->add_flag("--frames,!--no-frames", sim.write_frames, "Render PGM frames")
      ->capture_default_str();
  simulate->add_option("--out-dir", sim.out_dir, "Output directory")->capture_default_str();
  simulate->add_option("--gt-out", sim.gt_out, "Ground-truth calibration path");

  CalibrateOpts cal;
  auto* calibrate = app.add_subcommand("calibrate", "Estimate the calibration matrix");
  calibrate->add_option("--phantom", cal.phantom_path, "Phantom CSV")->required();
  calibrate->add_option("--observations", cal.observations_path, "Observations CSV")->required();
  calibrate->add_option("--poses", cal.poses_path, "Poses CSV")->required();
  calibrate->add_option("--out", cal.out, "Output calibration file")->required();
  calibrate->add_option("--lr", cal.lr, "Adam learning rate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  calibrate->add_option("--epsilon", cal.epsilon, "Error threshold (mm^2)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  calibrate->add_option("--max-iters", cal.max_iters, "Iteration cap")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  calibrate->add_option("--plateau-window", cal.plateau_window, "Plateau window (iterations)")
      ->capture_default_str();
  calibrate->add_option("--plateau-rel-tol", cal.plateau_rel_tol,
                        "Relative improvement defining a plateau")
      ->capture_default_str();
  calibrate->add_option("--restarts", cal.restarts, "Extra jittered starts")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  calibrate->add_option("--restart-seed", cal.restart_seed, "Seed for restart jitter")
      ->capture_default_str();
  calibrate->add_flag("--strict", cal.strict, "Exit 3 when not converged");
  calibrate->add_flag("--icp", cal.icp, "Nearest-neighbor ICP registration (unlabeled landmarks)");

  EvaluateOpts ev;
  auto* evaluate = app.add_subcommand("evaluate", "Recompute landmark RMSE for a calibration");
  evaluate->add_option("--calib", ev.calib_path, "Calibration file")->required();
  evaluate->add_option("--phantom", ev.phantom_path, "Phantom CSV")->required();
  evaluate->add_option("--observations", ev.observations_path, "Observations CSV")->required();
  evaluate->add_option("--poses", ev.poses_path, "Poses CSV")->required();
  evaluate->add_option("--depth-mm", ev.depth_mm, "Depth label for the output line")
      ->capture_default_str();
  evaluate->add_flag("--icp", ev.icp, "Nearest-neighbor ICP registration");

  ReconstructOpts rec;
  auto* reconstruct = app.add_subcommand("reconstruct", "Paste tracked frames into a voxel volume");
  reconstruct->add_option("--calib", rec.calib_path, "Calibration file")->required();
  reconstruct->add_option("--poses", rec.poses_path, "Poses CSV")->required();
  reconstruct->add_option("--frames", rec.frames_dir, "Directory of frame_NNNNNN.pgm images")
      ->required();
  reconstruct->add_option("--out", rec.out_prefix, "Output path prefix (.meta/.raw)")->required();
  reconstruct->add_option("--spacing-mm", rec.spacing_mm, "Isotropic voxel spacing (mm)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  reconstruct->add_option("--padding-mm", rec.padding_mm, "Bounding-box padding (mm)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  reconstruct->add_option("--compound", rec.compound, "Compounding mode: mean|max|latest")
      ->check(CLI::IsMember({"mean", "max", "latest"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (app.got_subcommand(phantom_gen)) return run_phantom_gen(pg);
    if (app.got_subcommand(simulate)) return run_simulate(sim);
    if (app.got_subcommand(calibrate)) return run_calibrate(cal);
    if (app.got_subcommand(evaluate)) return run_evaluate(ev);
    if (app.got_subcommand(reconstruct)) return run_reconstruct(rec);
  } catch (const InvalidSpec& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DegenerateGeometry& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
