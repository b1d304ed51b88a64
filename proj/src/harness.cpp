#include "gfno/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "gfno/spectral.hpp"

namespace gfno::harness {

namespace {

void require_rank(const Tensor& t, std::size_t r, const char* what) {
  if (t.rank() != r) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(r) + ", got " + gfno::to_string(t.shape()));
  }
}

/// Rows [begin, begin + count) along axis 0.
Tensor take(const Tensor& t, std::size_t begin, std::size_t count) {
  Shape s = t.shape();
  const std::size_t row = t.raw().size() / s[0];
  s[0] = count;
  Tensor out(s, t.dtype());
  std::memcpy(out.raw().data(), t.raw().data() + begin * row, count * row * sizeof(double));
  return out;
}

/// (N, L, n, n) -> (N, count, n, n) frames [begin, begin + count).
Tensor frames(const Tensor& t, std::size_t begin, std::size_t count) {
  const Shape& s = t.shape();
  const std::size_t plane = s[2] * s[3];
  Tensor out({s[0], count, s[2], s[3]});
  for (std::size_t b = 0; b < s[0]; ++b) {
    std::memcpy(out.raw().data() + b * count * plane, t.raw().data() + (b * s[1] + begin) * plane,
                count * plane * sizeof(double));
  }
  return out;
}

}  // namespace

Strategy parse_strategy(const std::string& s) {
  if (s == "markov") return Strategy::markov;
  if (s == "tf" || s == "teacher_forcing" || s == "teacher-forcing") return Strategy::teacher_forcing;
  if (s == "recurrent") return Strategy::recurrent;
  throw std::invalid_argument("unknown training strategy '" + s + "' (expected markov, tf or recurrent)");
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::markov: return "markov";
    case Strategy::teacher_forcing: return "tf";
    case Strategy::recurrent: return "recurrent";
  }
  return "?";
}

Tensor downsample(const Tensor& x, std::size_t factor, DownsampleMode mode) {
  if (x.rank() < 2) throw ShapeError("downsample: need two spatial axes, got " + gfno::to_string(x.shape()));
  require_real(x, "downsample");
  const std::size_t nx = x.extent(-2), ny = x.extent(-1);
  if (factor == 0 || nx % factor != 0 || ny % factor != 0) {
    throw ShapeError("downsample: factor " + std::to_string(factor) + " does not divide " + gfno::to_string(x.shape()));
  }
  const std::size_t mx = nx / factor, my = ny / factor;
  Shape s = x.shape();
  s[s.size() - 2] = mx;
  s[s.size() - 1] = my;
  Tensor out(s);
  const std::size_t slices = x.numel() / (nx * ny);
  auto src = x.data();
  auto dst = out.data();
  const double inv = 1.0 / static_cast<double>(factor * factor);
  for (std::size_t p = 0; p < slices; ++p) {
    const double* in = src.data() + p * nx * ny;
    double* o = dst.data() + p * mx * my;
    for (std::size_t i = 0; i < mx; ++i)
      for (std::size_t j = 0; j < my; ++j) {
        if (mode == DownsampleMode::strided) {
          o[i * my + j] = in[i * factor * ny + j * factor];
        } else {
          double acc = 0.0;
          for (std::size_t a = 0; a < factor; ++a)
            for (std::size_t b = 0; b < factor; ++b) acc += in[(i * factor + a) * ny + j * factor + b];
          o[i * my + j] = acc * inv;
        }
      }
  }
  return out;
}

std::vector<Sample> make_pairs(const Tensor& traj, Strategy strategy, std::size_t in_steps) {
  require_rank(traj, 3, "make_pairs");
  if (strategy == Strategy::markov) in_steps = 1;
  if (in_steps == 0) throw std::invalid_argument("make_pairs: in_steps must be positive");
  const std::size_t len = traj.shape()[0];
  if (len <= in_steps) {
    throw std::invalid_argument("make_pairs: trajectory of length " + std::to_string(len) +
                                " is too short for " + std::to_string(in_steps) + " input steps");
  }
  std::vector<Sample> out;
  if (strategy == Strategy::recurrent) {
    out.push_back({take(traj, 0, in_steps), take(traj, in_steps, len - in_steps)});
    return out;
  }
  for (std::size_t t = 0; t + in_steps < len; ++t) out.push_back({take(traj, t, in_steps), take(traj, t + in_steps, 1)});
  return out;
}

std::vector<std::size_t> augment(Tensor& inputs, Tensor& targets, group::Group g, std::mt19937_64& rng) {
  const std::size_t batch = inputs.shape().at(0);
  if (targets.shape().at(0) != batch) {
    throw ShapeError("augment: batch mismatch " + gfno::to_string(inputs.shape()) + " vs " + gfno::to_string(targets.shape()));
  }
  std::vector<std::size_t> drawn(batch, 0);
  if (g == group::Group::none) return drawn;
  std::uniform_int_distribution<std::size_t> pick(0, group::order(g) - 1);
  const std::size_t ri = inputs.raw().size() / batch, rt = targets.raw().size() / batch;
  for (std::size_t b = 0; b < batch; ++b) {
    drawn[b] = pick(rng);
    if (drawn[b] == 0) continue;
    const auto e = group::GroupElement::rotation(group::StabilizerElement::from_index(g, drawn[b]));
    Tensor xi = group::act_plane(e, take(inputs, b, 1));
    Tensor yi = group::act_plane(e, take(targets, b, 1));
    std::memcpy(inputs.raw().data() + b * ri, xi.raw().data(), ri * sizeof(double));
    std::memcpy(targets.raw().data() + b * rt, yi.raw().data(), rt * sizeof(double));
  }
  return drawn;
}

double rmse_rel(const Tensor& pred, const Tensor& truth) {
  require_same_shape(pred, truth, "rmse_rel");
  if (pred.rank() == 0 || pred.shape()[0] == 0) throw ShapeError("rmse_rel: empty input");
  const std::size_t items = pred.shape()[0], row = pred.raw().size() / items;
  auto p = pred.raw();
  auto y = truth.raw();
  double total = 0.0;
  for (std::size_t i = 0; i < items; ++i) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = i * row; j < (i + 1) * row; ++j) {
      num += (p[j] - y[j]) * (p[j] - y[j]);
      den += y[j] * y[j];
    }
    if (den == 0.0) throw std::domain_error("rmse_rel: target item " + std::to_string(i) + " has zero norm");
    total += std::sqrt(num / den);
  }
  return total / static_cast<double>(items);
}

Predictor model_predictor(model::Model& m) {
  return [&m](const Tensor& windows) { return m.predict(windows); };
}

Tensor rollout(const Predictor& p, const Tensor& windows, std::size_t steps) {
  require_rank(windows, 4, "rollout");
  const Shape& s = windows.shape();
  const std::size_t batch = s[0], t_in = s[1], plane = s[2] * s[3];
  Tensor out({batch, steps, s[2], s[3]});
  Tensor window = windows;
  for (std::size_t r = 0; r < steps; ++r) {
    const Tensor next = p(window);
    if (next.shape() != Shape{batch, 1, s[2], s[3]}) {
      throw ShapeError("rollout: predictor returned " + gfno::to_string(next.shape()) + " for window " +
                       gfno::to_string(window.shape()));
    }
    Tensor shifted(window.shape());
    for (std::size_t b = 0; b < batch; ++b) {
      double* w = shifted.raw().data() + b * t_in * plane;
      std::memcpy(w, window.raw().data() + (b * t_in + 1) * plane, (t_in - 1) * plane * sizeof(double));
      std::memcpy(w + (t_in - 1) * plane, next.raw().data() + b * plane, plane * sizeof(double));
      std::memcpy(out.raw().data() + (b * steps + r) * plane, next.raw().data() + b * plane, plane * sizeof(double));
    }
    window = std::move(shifted);
  }
  return out;
}

namespace {

/// Rolls out every trajectory in chunks of `batch`; returns (N, L - T_in, n, n).
Tensor rollout_all(const Predictor& p, const Tensor& trajs, std::size_t in_steps, std::size_t batch) {
  require_rank(trajs, 4, "rollout_eval");
  const std::size_t count = trajs.shape()[0], len = trajs.shape()[1];
  if (len <= in_steps) {
    throw std::invalid_argument("rollout_eval: trajectories of length " + std::to_string(len) +
                                " are too short for " + std::to_string(in_steps) + " input steps");
  }
  batch = std::max<std::size_t>(batch, 1);
  const Tensor init = frames(trajs, 0, in_steps);
  const std::size_t steps = len - in_steps;
  Tensor out({count, steps, trajs.shape()[2], trajs.shape()[3]});
  const std::size_t row = out.raw().size() / std::max<std::size_t>(count, 1);
  for (std::size_t b = 0; b < count; b += batch) {
    const std::size_t c = std::min(batch, count - b);
    const Tensor part = rollout(p, take(init, b, c), steps);
    std::memcpy(out.raw().data() + b * row, part.raw().data(), c * row * sizeof(double));
  }
  return out;
}

}  // namespace

double rollout_eval(const Predictor& p, const Tensor& trajs, std::size_t in_steps, std::size_t batch) {
  const Tensor pred = rollout_all(p, trajs, in_steps, batch);
  return rmse_rel(pred, frames(trajs, in_steps, trajs.shape()[1] - in_steps));
}

double rotation_test(const Predictor& p, const Tensor& trajs, std::size_t in_steps, std::size_t batch) {
  const auto rot = group::GroupElement::rotation({group::Group::p4, 1, 1});
  return rollout_eval(p, group::act_plane(rot, trajs), in_steps, batch);
}

double superres_eval(const Predictor& p, const Tensor& fine_trajs, std::size_t in_steps, std::size_t batch) {
  return rollout_eval(p, fine_trajs, in_steps, batch);
}

double interp_baseline(const Predictor& p, const Tensor& fine_trajs, std::size_t factor, std::size_t in_steps,
                       std::size_t batch) {
  require_rank(fine_trajs, 4, "interp_baseline");
  const std::size_t n = fine_trajs.shape()[2];
  const Tensor coarse = downsample(fine_trajs, factor, DownsampleMode::strided);
  const Tensor pred = rollout_all(p, coarse, in_steps, batch);
  const Tensor up = spectral::trig_interpolate(pred, n, fine_trajs.shape()[3]);
  return rmse_rel(up, frames(fine_trajs, in_steps, fine_trajs.shape()[1] - in_steps));
}

double one_step_rmse(const Predictor& p, const Tensor& trajs, std::size_t in_steps, std::size_t batch) {
  require_rank(trajs, 4, "one_step_rmse");
  const std::size_t count = trajs.shape()[0], len = trajs.shape()[1];
  if (len <= in_steps) throw std::invalid_argument("one_step_rmse: trajectories too short");
  const std::size_t per = len - in_steps;
  std::vector<Tensor> inputs, targets;
  for (std::size_t i = 0; i < count; ++i) {
    for (auto& s : make_pairs(take(trajs, i, 1).reshaped({len, trajs.shape()[2], trajs.shape()[3]}),
                              Strategy::teacher_forcing, in_steps)) {
      inputs.push_back(std::move(s.input));
      targets.push_back(std::move(s.target));
    }
  }
  const std::size_t total = count * per, n1 = trajs.shape()[2], n2 = trajs.shape()[3];
  batch = std::max<std::size_t>(batch, 1);
  double sum = 0.0;
  for (std::size_t b = 0; b < total; b += batch) {
    const std::size_t c = std::min(batch, total - b);
    Tensor x({c, in_steps, n1, n2}), y({c, 1, n1, n2});
    for (std::size_t j = 0; j < c; ++j) {
      std::memcpy(x.raw().data() + j * inputs[b + j].numel(), inputs[b + j].raw().data(),
                  inputs[b + j].numel() * sizeof(double));
      std::memcpy(y.raw().data() + j * n1 * n2, targets[b + j].raw().data(), n1 * n2 * sizeof(double));
    }
    sum += rmse_rel(p(x), y) * static_cast<double>(c);
  }
  return sum / static_cast<double>(total);
}

std::string to_json(const EvalReport& r) {
  nlohmann::json j;
  auto put = [&j](const char* key, const std::optional<double>& v) {
    if (v) {
      if (!std::isfinite(*v) || *v < 0.0) throw std::domain_error(std::string("EvalReport: invalid ") + key);
      j["rmse"][key] = *v;
      j["rmse_percent"][key] = 100.0 * *v;
    }
  };
  put("test", r.test);
  put("test_rot90", r.test_rot90);
  put("superres", r.superres);
  put("interp_baseline", r.interp_baseline);
  j["model_id"] = r.model_id;
  j["dataset_id"] = r.dataset_id;
  j["seeds"] = r.seeds;
  j["interp_scheme"] = r.interp_scheme;
  return j.dump(2);
}

}  // namespace gfno::harness
