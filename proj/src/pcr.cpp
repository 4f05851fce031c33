#include "graspprior/pcr.hpp"

#include <algorithm>
#include <cmath>

#include "graspprior/error.hpp"

namespace graspprior
{

void PcrConfig::validate() const
{
  if (!(theta > mu) || !(mu >= 0.0))
    throw Error(ErrorKind::InvalidArgument, "need theta > mu >= 0");
  if (!(phi >= 0.0))
    throw Error(ErrorKind::InvalidArgument, "phi must be non-negative");
  if (!(eps_contact > 0.0))
    throw Error(ErrorKind::InvalidArgument, "eps_contact must be positive");
}

double antipodal_term(const ContactPair& pair, double eps_contact)
{
  const Vec3 v = pair.c2 - pair.c1;
  const double len = v.norm();
  if (!(len >= eps_contact))
    throw Error(ErrorKind::DegenerateContact, "contacts closer than eps_contact");
  const Vec3 u = v / len;
  const double cos2 = u.dot(pair.n2.normalized());
  const double cos1 = (-u).dot(pair.n1.normalized());
  return std::clamp(1.0 - 0.5 * (cos2 + cos1), 0.0, 2.0);
}

DistanceTerms distance_terms(const ContactPair& pair, const PcrConfig& cfg)
{
  DistanceTerms out;
  out.r_c = std::max(0.0, cfg.theta - pair.d1) + std::max(0.0, cfg.theta - pair.d2);
  out.r_s = std::max(0.0, pair.d1 - cfg.mu) + std::max(0.0, pair.d2 - cfg.mu);
  return out;
}

namespace
{

// s_i / mean(s) rounded to 36 significant bits, so that rescaled scores (whose ratios
// differ only in the last bits) give identical weights
double quantized_weight(long double ratio)
{
  if (ratio == 0.0L)
    return 0.0;
  int e = 0;
  std::frexp(ratio, &e);
  return double(std::ldexp(std::round(std::ldexp(ratio, 36 - e)), e - 36));
}

}  // namespace

WeightedBatch weighted_batch(std::span<const double> terms, std::span<const double> scores)
{
  if (terms.size() != scores.size())
    throw Error(ErrorKind::InvalidArgument, "terms and scores differ in length");
  if (terms.empty())
    throw Error(ErrorKind::InvalidArgument, "batch must hold at least one grasp");

  const double m = double(terms.size());
  long double sum = 0.0L;
  for (double s : scores)
    sum += s;
  const long double mean_score = sum / m;
  if (!(mean_score > 0.0L))
    throw Error(ErrorKind::ZeroWeight, "mean grasp score must be positive");

  WeightedBatch out;
  out.per_grasp.reserve(terms.size());
  double total = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i)
  {
    out.per_grasp.push_back(quantized_weight(scores[i] / mean_score) * terms[i]);
    total += out.per_grasp.back();
  }
  out.mean = total / m;
  return out;
}

double total_loss_hook(double external_loss, double regularizer, const PcrConfig& cfg)
{
  return external_loss + cfg.phi * regularizer;
}

namespace
{

struct ContactField
{
  Vec3 c;
  double d;
  Vec3 grad;  // raw SDF gradient, world frame
  Vec3 n;
  Mat3 hess;  // world frame
};

ContactField probe(const PosedGrid& object, const Vec3& c)
{
  ContactField f;
  f.c = c;
  f.d = object.distance(c);
  f.grad = object.gradient(c);
  if (f.grad.norm() < 1e-9)
    throw Error(ErrorKind::DegenerateNormal, "SDF gradient vanishes at a contact");
  f.n = f.grad.normalized();
  f.hess = object.hessian(c);
  return f;
}

// d(u . n)/dc where n = grad/|grad| at c: (dn/dc)^T u with dn/dc = (I - n n^T) H / |grad|
Vec3 normal_sensitivity(const ContactField& f, const Vec3& u)
{
  const Vec3 tangential = u - f.n.dot(u) * f.n;
  return f.hess * tangential / f.grad.norm();
}

struct AntipodalParts
{
  double r_a;
  Vec3 d_c1;
  Vec3 d_c2;
};

AntipodalParts antipodal_parts(const ContactField& f1, const ContactField& f2, double eps_contact)
{
  const Vec3 v = f2.c - f1.c;
  const double len = v.norm();
  if (!(len >= eps_contact))
    throw Error(ErrorKind::DegenerateContact, "contacts closer than eps_contact");
  const Vec3 u = v / len;
  const Vec3 a = f2.n - f1.n;
  const double ua = u.dot(a);

  AntipodalParts out;
  out.r_a = 1.0 - 0.5 * ua;
  const Vec3 through_dir = (a - ua * u) / len;
  out.d_c1 = 0.5 * through_dir + 0.5 * normal_sensitivity(f1, u);
  out.d_c2 = -0.5 * through_dir - 0.5 * normal_sensitivity(f2, u);
  return out;
}

}  // namespace

PcrTerms pcr_value_and_grad(const GraspPose& g, const GripperSpec& spec, const PosedGrid& object, const PcrConfig& cfg)
{
  const ContactPositions pos = contacts(spec, g);
  const ContactField f1 = probe(object, pos.c1);
  const ContactField f2 = probe(object, pos.c2);
  const AntipodalParts ap = antipodal_parts(f1, f2, cfg.eps_contact);

  PcrTerms terms;
  terms.r_a = ap.r_a;
  Vec3 d_c1 = ap.d_c1;
  Vec3 d_c2 = ap.d_c2;

  auto hinge = [&](const ContactField& f, Vec3& d_c) {
    if (cfg.theta - f.d > 0.0)
    {
      terms.r_c += cfg.theta - f.d;
      d_c -= f.grad;
    }
    if (f.d - cfg.mu > 0.0)
    {
      terms.r_s += f.d - cfg.mu;
      d_c += f.grad;
    }
  };
  hinge(f1, d_c1);
  hinge(f2, d_c2);

  terms.grad = pose_gradient_from_contacts(spec, g, d_c1, d_c2);
  terms.r_weighted = terms.value();
  return terms;
}

AntipodalValue antipodal_value_and_grad(const GraspPose& g, const GripperSpec& spec, const PosedGrid& object,
                                        double eps_contact)
{
  const ContactPositions pos = contacts(spec, g);
  const ContactField f1 = probe(object, pos.c1);
  const ContactField f2 = probe(object, pos.c2);
  const AntipodalParts ap = antipodal_parts(f1, f2, eps_contact);
  return {ap.r_a, pose_gradient_from_contacts(spec, g, ap.d_c1, ap.d_c2)};
}

std::vector<PcrTerms> pcr_batch(std::span<const GraspPose> grasps, const GripperSpec& spec,
                                std::span<const PosedGrid> objects, const PcrConfig& cfg)
{
  if (grasps.size() != objects.size())
    throw Error(ErrorKind::InvalidArgument, "one posed grid is needed per grasp");
  std::vector<PcrTerms> out;
  if (grasps.empty())
    return out;
  out.reserve(grasps.size());
  std::vector<double> values, scores;
  for (std::size_t i = 0; i < grasps.size(); ++i)
  {
    out.push_back(pcr_value_and_grad(grasps[i], spec, objects[i], cfg));
    values.push_back(out.back().value());
    scores.push_back(grasps[i].score);
  }
  const WeightedBatch wb = weighted_batch(values, scores);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i].r_weighted = wb.per_grasp[i];
  return out;
}

}  // namespace graspprior
