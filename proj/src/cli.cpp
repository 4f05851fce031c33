#include "graspprior/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "graspprior/csjo.hpp"
#include "graspprior/error.hpp"
#include "graspprior/gradcheck.hpp"
#include "graspprior/io.hpp"
#include "graspprior/parallel.hpp"
#include "graspprior/pcr.hpp"
#include "graspprior/scene_eval.hpp"

namespace graspprior
{

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace
{

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

std::string friction_key(double mu)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", mu);
  return buf;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag)
{
  if (flag)
    return *flag;
  if (const char* env = std::getenv("GRASPPRIOR_SEED"))
  {
    try
    {
      return std::stoull(env);
    }
    catch (const std::logic_error&)
    {
      throw CLI::ValidationError("GRASPPRIOR_SEED", std::string("not an unsigned integer: ") + env);
    }
  }
  return 0;
}

ordered_json manifest(const std::string& command, std::uint64_t seed, ordered_json config, ordered_json inputs,
                      ordered_json outputs)
{
  ordered_json m;
  m["command"] = command;
  m["version"] = kToolVersion;
  m["seed"] = seed;
  m["config"] = std::move(config);
  m["inputs"] = std::move(inputs);
  m["outputs"] = std::move(outputs);
  return m;
}

void write_manifest_for_file(const fs::path& out_file, const ordered_json& m)
{
  write_text(fs::path(out_file.string() + ".manifest.json"), m.dump(2) + "\n");
}

void write_manifest_for_dir(const fs::path& out_dir, const ordered_json& m)
{
  write_text(out_dir / "manifest.json", m.dump(2) + "\n");
}

// refined-file number that may be missing
std::string json_real(double v)
{
  return std::isfinite(v) ? format_real(v) : "null";
}

ordered_json pcr_config_json(const PcrConfig& c)
{
  return {{"theta", c.theta}, {"mu", c.mu}, {"phi", c.phi}, {"eps_contact", c.eps_contact}};
}

ordered_json csjo_config_json(const CsjoConfig& c)
{
  return {{"alpha", c.alpha},         {"beta", c.beta},
          {"gamma", c.gamma},         {"t_max_score", c.t_max_score},
          {"learning_rate", c.learning_rate}, {"iterations", c.iterations},
          {"adam_beta1", c.adam_beta1}, {"adam_beta2", c.adam_beta2},
          {"adam_eps", c.adam_eps},   {"fd_step", c.fd_step}};
}

struct Options
{
  // shared
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string scene;
  std::string grasps;
  int workers = 1;

  // gen-scene / bake-sdf
  int objects = 1;
  int res = 64;
  int points = 512;
  double noise = 0.0;
  double domain = 0.3;
  std::string shapes = "sphere,box,cylinder";

  // sample-grasps
  int per_object = 10;

  PcrConfig pcr;
  CsjoConfig csjo;
  std::string trace;
  std::string predictor = "oracle-antipodal";

  std::string frictions = "0.2:1.2:0.2";

  int cases = 100;
  bool corrupt_gradient = false;
};

int cmd_gen_scene(const Options& o, std::ostream& out)
{
  const std::uint64_t seed = resolve_seed(o.seed);
  SceneOptions so;
  so.n_objects = o.objects;
  so.grid_resolution = o.res;
  so.cloud_points = o.points;
  so.cloud_noise = o.noise;
  so.domain = o.domain;
  so.shape_mix.clear();
  std::stringstream ss(o.shapes);
  std::string name;
  while (std::getline(ss, name, ','))
    so.shape_mix.push_back(shape_kind_from_string(name));

  const fs::path dir(o.out);
  fs::create_directories(dir);
  write_manifest_for_dir(dir, manifest("gen-scene", seed,
                                       {{"objects", o.objects}, {"res", o.res}, {"points", o.points},
                                        {"noise", o.noise}, {"domain", o.domain}, {"shapes", o.shapes}},
                                       ordered_json::object(), {{"scene", (dir / "scene.json").string()}}));
  const Scene scene = gen_scene(seed, so);
  save_scene(scene, dir / "scene.json");
  out << (dir / "scene.json").string() << "\n";
  return kExitOk;
}

int cmd_bake_sdf(const Options& o, std::ostream& out)
{
  const fs::path dir(o.out);
  fs::create_directories(dir);
  write_manifest_for_dir(dir, manifest("bake-sdf", 0, {{"res", o.res}}, {{"scene", o.scene}},
                                       {{"scene", (dir / "scene.json").string()}}));
  Scene scene = load_scene(o.scene);
  for (auto& obj : scene.objects)
  {
    AnalyticShape local = obj.shape;
    local.pose = Pose{};
    obj.grid = bake_grid({local}, object_domain(local), o.res);
  }
  save_scene(scene, dir / "scene.json");
  out << (dir / "scene.json").string() << "\n";
  return kExitOk;
}

int cmd_sample_grasps(const Options& o, std::ostream& out)
{
  const std::uint64_t seed = resolve_seed(o.seed);
  const fs::path out_file(o.out);
  write_manifest_for_file(out_file, manifest("sample-grasps", seed, {{"per_object", o.per_object}},
                                             {{"scene", o.scene}}, {{"grasps", o.out}}));
  const Scene scene = load_scene(o.scene);
  const GripperSpec spec = GripperSpec::default_spec();
  const SceneSdf obstacles = scene.sdf();

  std::vector<std::vector<GraspPose>> per_object(scene.objects.size());
  parallel_for(scene.objects.size(), o.workers, [&](std::size_t i) {
    const SceneObject& obj = scene.objects[i];
    const AnalyticScorePredictor scorer(obj.posed(), spec, obstacles);
    per_object[i] = sample_grasp_candidates(obj.cloud, o.per_object, spec,
                                            seed * 1000003ULL + std::uint64_t(obj.id), scorer);
  });
  std::vector<GraspPose> all;
  for (auto& v : per_object)
    all.insert(all.end(), v.begin(), v.end());
  write_grasps(out_file, all);
  out << all.size() << " grasps -> " << o.out << "\n";
  return kExitOk;
}

int cmd_pcr_eval(const Options& o, std::ostream& out)
{
  o.pcr.validate();
  const fs::path out_file(o.out);
  write_manifest_for_file(out_file, manifest("pcr-eval", 0, pcr_config_json(o.pcr),
                                             {{"grasps", o.grasps}, {"scene", o.scene}}, {{"csv", o.out}}));
  const Scene scene = load_scene(o.scene);
  const std::vector<GraspPose> grasps = read_grasps(o.grasps);
  const GripperSpec spec = GripperSpec::default_spec();

  std::vector<std::optional<PcrTerms>> terms(grasps.size());
  parallel_for(grasps.size(), o.workers, [&](std::size_t i) {
    try
    {
      terms[i] = pcr_value_and_grad(grasps[i], spec, scene.object(grasps[i].object_id).posed(), o.pcr);
    }
    catch (const Error& e)
    {
      if (e.kind() != ErrorKind::DegenerateContact && e.kind() != ErrorKind::DegenerateNormal)
        throw;
    }
  });

  // score weighting over the rows that could be evaluated
  std::vector<double> values, scores;
  for (std::size_t i = 0; i < grasps.size(); ++i)
    if (terms[i])
    {
      values.push_back(terms[i]->value());
      scores.push_back(grasps[i].score);
    }
  if (!values.empty())
  {
    const WeightedBatch wb = weighted_batch(values, scores);
    std::size_t v = 0;
    for (auto& t : terms)
      if (t)
        t->r_weighted = wb.per_grasp[v++];
  }

  std::string csv = "grasp_index,object_id,r_a,r_c,r_s,r_weighted,grad_norm\n";
  for (std::size_t i = 0; i < grasps.size(); ++i)
  {
    csv += std::to_string(i) + "," + std::to_string(grasps[i].object_id) + ",";
    if (terms[i])
      csv += format_real(terms[i]->r_a) + "," + format_real(terms[i]->r_c) + "," + format_real(terms[i]->r_s) + "," +
             format_real(terms[i]->r_weighted) + "," + format_real(terms[i]->grad.norm()) + "\n";
    else
      csv += "nan,nan,nan,nan,nan\n";
  }
  write_text(out_file, csv);
  out << grasps.size() << " rows -> " << o.out << "\n";
  return kExitOk;
}

int cmd_refine(const Options& o, std::ostream& out)
{
  o.csjo.validate();
  if (o.predictor != "oracle-antipodal")
    throw CLI::ValidationError("--predictor", "only 'oracle-antipodal' is built in");
  const std::uint64_t seed = resolve_seed(o.seed);
  const fs::path out_file(o.out);
  ordered_json config = csjo_config_json(o.csjo);
  config["predictor"] = o.predictor;
  write_manifest_for_file(out_file, manifest("refine", seed, config, {{"grasps", o.grasps}, {"scene", o.scene}},
                                             {{"grasps", o.out}, {"trace", o.trace}}));

  const Scene scene = load_scene(o.scene);
  const std::vector<GraspPose> grasps = read_grasps(o.grasps);
  const GripperSpec spec = GripperSpec::default_spec();
  const SceneSdf obstacles = scene.sdf();

  std::vector<GraspPose> refined(grasps.size());
  std::vector<RefinedFields> fields(grasps.size());
  std::vector<std::optional<RefineTrace>> traces(grasps.size());

  parallel_for(grasps.size(), o.workers, [&](std::size_t i) {
    const GraspPose& g0 = grasps[i];
    const SceneObject& obj = scene.object(g0.object_id);
    const OracleContactPredictor predictor(nearest_antipodal_target(obj.cloud, g0, spec), spec);
    const AnalyticScorePredictor scorer(obj.posed(), spec, obstacles);
    const CsjoInputs inputs{obj.cloud, predictor, scorer, spec};
    try
    {
      RefineResult r = refine(g0, inputs, o.csjo);
      refined[i] = r.grasp;
      fields[i] = {r.j_initial(), r.j_final(), r.trace.best_index};
      traces[i] = std::move(r.trace);
    }
    catch (const Error& e)
    {
      if (e.kind() != ErrorKind::RefinementFailed)
        throw;
      refined[i] = g0;
      const double nan = std::numeric_limits<double>::quiet_NaN();
      fields[i] = {nan, nan, 0};
    }
  });

  std::string text;
  for (std::size_t i = 0; i < grasps.size(); ++i)
  {
    std::string line = grasp_to_json_line(refined[i]);
    line.pop_back();
    line += ", \"j_initial\": " + json_real(fields[i].j_initial) + ", \"j_final\": " + json_real(fields[i].j_final) +
            ", \"iters_used\": " + std::to_string(fields[i].iters_used) + "}\n";
    text += line;
  }
  write_text(out_file, text);

  if (!o.trace.empty())
  {
    const fs::path dir(o.trace);
    fs::create_directories(dir);
    for (std::size_t i = 0; i < grasps.size(); ++i)
    {
      if (!traces[i])
        continue;
      std::string csv = "iter,j,j_c,j_s,delta_t\n";
      for (std::size_t k = 0; k < traces[i]->entries.size(); ++k)
      {
        const auto& b = traces[i]->entries[k].breakdown;
        csv += std::to_string(k) + ",";
        csv += b ? format_real(b->j) + "," + format_real(b->j_c) + "," + format_real(b->j_s) + "," +
                       format_real(b->delta_t)
                 : std::string("nan,nan,nan,nan");
        csv += "\n";
      }
      write_text(dir / ("trace_" + std::to_string(i) + ".csv"), csv);
    }
  }
  out << grasps.size() << " grasps refined -> " << o.out << "\n";
  return kExitOk;
}

int cmd_evaluate(const Options& o, std::ostream& out)
{
  EvalConfig cfg;
  cfg.frictions = parse_frictions(o.frictions);
  const fs::path out_file(o.out);
  write_manifest_for_file(out_file, manifest("evaluate", 0,
                                             {{"frictions", cfg.frictions},
                                              {"grasps_per_object_cap", cfg.grasps_per_object_cap},
                                              {"theta", cfg.theta}},
                                             {{"grasps", o.grasps}, {"scene", o.scene}}, {{"report", o.out}}));
  const Scene scene = load_scene(o.scene);
  const std::vector<GraspPose> grasps = read_grasps(o.grasps);
  const GripperSpec spec = GripperSpec::default_spec();
  const ApReport report = ap_metric(grasps, scene, spec, cfg, o.workers);

  ordered_json j;
  j["scene"] = fs::path(o.scene).filename().string();
  j["n_grasps"] = report.n_grasps;
  j["k"] = report.k;
  j["ap"] = report.ap;
  ordered_json by_friction = ordered_json::object();
  for (std::size_t f = 0; f < report.frictions.size(); ++f)
    by_friction[friction_key(report.frictions[f])] = report.ap_by_friction[f];
  j["ap_by_friction"] = by_friction;
  ordered_json per_object = ordered_json::object();
  for (const auto& [id, obj] : report.per_object)
  {
    ordered_json successes = ordered_json::object();
    for (std::size_t f = 0; f < report.frictions.size(); ++f)
      successes[friction_key(report.frictions[f])] = obj.successes[f];
    per_object[std::to_string(id)] = {{"n_grasps", obj.n_grasps}, {"successes", successes}};
  }
  j["per_object"] = per_object;
  write_text(out_file, j.dump(2) + "\n");
  out << "AP " << format_real(report.ap) << " -> " << o.out << "\n";
  return kExitOk;
}

int cmd_gradcheck(const Options& o, std::ostream& out, std::ostream& err)
{
  GradcheckOptions go;
  go.seed = resolve_seed(o.seed);
  go.cases_per_shape = o.cases;
  go.corrupt_gradient = o.corrupt_gradient;
  if (!o.out.empty())
    write_manifest_for_file(fs::path(o.out), manifest("gradcheck", go.seed,
                                                      {{"cases", o.cases}, {"step", go.step},
                                                       {"tolerance", go.tolerance}, {"res", go.resolution}},
                                                      ordered_json::object(), {{"summary", o.out}}));
  const GradcheckReport r = run_gradcheck(go);
  ordered_json summary;
  summary["seed"] = go.seed;
  summary["cases"] = r.cases;
  summary["rejected"] = r.rejected;
  summary["max_rel_error_pcr"] = r.max_rel_pcr;
  summary["max_rel_error_objective"] = r.max_rel_objective;
  summary["tolerance"] = go.tolerance;
  summary["pass"] = r.pass;
  if (!o.out.empty())
    write_text(fs::path(o.out), summary.dump(2) + "\n");
  out << summary.dump(2) << "\n";
  if (!r.pass)
  {
    err << "gradient check failed; offending case:\n" << r.offending_case << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}

}  // namespace

std::vector<double> parse_frictions(const std::string& text)
{
  std::vector<double> out;
  auto number = [&](const std::string& s) {
    try
    {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size())
        throw std::invalid_argument(s);
      return v;
    }
    catch (const std::logic_error&)
    {
      throw CLI::ValidationError("--frictions", "not a number: '" + s + "'");
    }
  };

  if (text.find(':') != std::string::npos)
  {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ':'))
      parts.push_back(part);
    if (parts.size() != 3)
      throw CLI::ValidationError("--frictions", "expected lo:hi:step");
    const double lo = number(parts[0]), hi = number(parts[1]), step = number(parts[2]);
    if (!(step > 0.0) || hi < lo)
      throw CLI::ValidationError("--frictions", "need step > 0 and hi >= lo");
    for (int i = 0;; ++i)
    {
      const double v = std::round((lo + i * step) * 1e12) / 1e12;
      if (v > hi + 1e-9)
        break;
      out.push_back(v);
    }
  }
  else
  {
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ','))
      out.push_back(number(part));
  }
  if (out.empty())
    throw CLI::ValidationError("--frictions", "empty friction list");
  for (double mu : out)
    if (!(mu > 0.0))
      throw CLI::ValidationError("--frictions", "friction coefficients must be positive");
  return out;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
  CLI::App app{"Differentiable grasp-geometry toolkit: PCR regularizers, contact-map refinement and AP evaluation",
               "graspprior"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Options o;

  auto* gen = app.add_subcommand("gen-scene", "Generate a synthetic tabletop scene");
  gen->add_option("--seed", o.seed, "Random seed (else $GRASPPRIOR_SEED, else 0)");
  gen->add_option("--objects", o.objects, "Number of objects")->check(CLI::PositiveNumber);
  gen->add_option("--out", o.out, "Output directory")->required();
  gen->add_option("--res", o.res, "SDF grid resolution")->check(CLI::Range(2, 1024));
  gen->add_option("--points", o.points, "Surface samples per object")->check(CLI::PositiveNumber);
  gen->add_option("--noise", o.noise, "Positional noise sigma, m")->check(CLI::NonNegativeNumber);
  gen->add_option("--domain", o.domain, "Side of the placement square, m")->check(CLI::PositiveNumber);
  gen->add_option("--shapes", o.shapes, "Comma-separated shape mix");

  auto* bake = app.add_subcommand("bake-sdf", "Re-bake per-object SDF grids");
  bake->add_option("--scene", o.scene, "Scene file")->required();
  bake->add_option("--res", o.res, "SDF grid resolution")->check(CLI::Range(2, 1024));
  bake->add_option("--out", o.out, "Output directory")->required();

  auto* sample = app.add_subcommand("sample-grasps", "Sample antipodal grasp candidates");
  sample->add_option("--scene", o.scene, "Scene file")->required();
  sample->add_option("--per-object", o.per_object, "Candidates per object")->check(CLI::NonNegativeNumber);
  sample->add_option("--seed", o.seed, "Random seed (else $GRASPPRIOR_SEED, else 0)");
  sample->add_option("--out", o.out, "Output grasp file (JSON Lines)")->required();
  sample->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);

  auto* pcr = app.add_subcommand("pcr-eval", "Evaluate physical-constraint regularizers");
  pcr->add_option("--grasps", o.grasps, "Grasp file")->required();
  pcr->add_option("--scene", o.scene, "Scene file")->required();
  pcr->add_option("--theta", o.pcr.theta, "Collision threshold, m");
  pcr->add_option("--mu", o.pcr.mu, "Surface threshold, m");
  pcr->add_option("--phi", o.pcr.phi, "Regularizer weight");
  pcr->add_option("--out", o.out, "Output CSV")->required();
  pcr->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);

  auto* ref = app.add_subcommand("refine", "Refine grasps by contact-score joint optimization");
  ref->add_option("--grasps", o.grasps, "Grasp file")->required();
  ref->add_option("--scene", o.scene, "Scene file")->required();
  ref->add_option("--alpha", o.csjo.alpha, "Projection-map weight");
  ref->add_option("--beta", o.csjo.beta, "Score weight");
  ref->add_option("--gamma", o.csjo.gamma, "Translation-offset weight");
  ref->add_option("--t-max", o.csjo.t_max_score, "Score ceiling");
  ref->add_option("--lr", o.csjo.learning_rate, "Adam learning rate");
  ref->add_option("--iters", o.csjo.iterations, "Adam iterations")->check(CLI::NonNegativeNumber);
  ref->add_option("--seed", o.seed, "Random seed (else $GRASPPRIOR_SEED, else 0)");
  ref->add_option("--predictor", o.predictor, "Contact predictor (oracle-antipodal)");
  ref->add_option("--out", o.out, "Output grasp file")->required();
  ref->add_option("--trace", o.trace, "Directory for per-grasp trace CSVs");
  ref->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);

  auto* eval = app.add_subcommand("evaluate", "Object-balanced AP under friction-cone labels");
  eval->add_option("--grasps", o.grasps, "Grasp file")->required();
  eval->add_option("--scene", o.scene, "Scene file")->required();
  eval->add_option("--frictions", o.frictions, "lo:hi:step or comma list");
  eval->add_option("--out", o.out, "Report JSON")->required();
  eval->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of analytic gradients");
  grad->add_option("--seed", o.seed, "Random seed (else $GRASPPRIOR_SEED, else 0)");
  grad->add_option("--cases", o.cases, "Cases per shape")->check(CLI::PositiveNumber);
  grad->add_option("--out", o.out, "Optional summary JSON");
  grad->add_flag("--corrupt-gradient", o.corrupt_gradient)->group("");

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::CallForHelp&)
  {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitOk;
  }
  catch (const CLI::CallForVersion&)
  {
    out << kToolVersion << "\n";
    return kExitOk;
  }
  catch (const CLI::ParseError& e)
  {
    err << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try
  {
    if (gen->parsed())
      return cmd_gen_scene(o, out);
    if (bake->parsed())
      return cmd_bake_sdf(o, out);
    if (sample->parsed())
      return cmd_sample_grasps(o, out);
    if (pcr->parsed())
      return cmd_pcr_eval(o, out);
    if (ref->parsed())
      return cmd_refine(o, out);
    if (eval->parsed())
      return cmd_evaluate(o, out);
    if (grad->parsed())
      return cmd_gradcheck(o, out, err);
  }
  catch (const CLI::ParseError& e)
  {
    err << e.what() << "\n";
    return kExitUsage;
  }
  catch (const Error& e)
  {
    err << e.what() << "\n";
    if (e.is_io())
      return kExitIo;
    if (e.kind() == ErrorKind::InvalidArgument)
      return kExitUsage;
    return kExitNumerical;
  }
  catch (const fs::filesystem_error& e)
  {
    err << e.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}

int run_cli(int argc, char** argv)
{
  return run_cli(argc, argv, std::cout, std::cerr);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
  std::vector<const char*> argv{"graspprior"};
  for (const auto& a : args)
    argv.push_back(a.c_str());
  return run_cli(int(argv.size()), argv.data(), out, err);
}

}  // namespace graspprior
