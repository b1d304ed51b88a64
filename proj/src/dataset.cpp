#include <exception>
#include <fstream>
#include <nlohmann/json.hpp>

#include "gfno/pde.hpp"

namespace gfno::pde {

using nlohmann::json;

const char* const kGeneratorVersion = "gfno-ns-1";

Dataset Dataset::subset(std::size_t begin, std::size_t count) const {
  if (begin + count > size() || count == 0) {
    throw std::out_of_range("dataset subset [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                            ") out of range for " + std::to_string(size()) + " trajectories");
  }
  Shape shape = data.shape();
  shape[0] = count;
  Tensor out(shape);
  const std::size_t per = data.numel() / data.shape()[0];
  std::copy_n(data.data().data() + begin * per, count * per, out.data().data());
  Dataset d{std::move(out), manifest};
  d.manifest.seeds.assign(manifest.seeds.begin() + static_cast<long>(begin),
                          manifest.seeds.begin() + static_cast<long>(begin + count));
  return d;
}

Dataset generate_dataset(const NSConfig& base, std::size_t count, std::uint64_t seed0) {
  base.validate();
  if (count == 0) throw std::invalid_argument("generate_dataset: count must be positive");
  const std::size_t n = base.n, frames = base.T + 1;
  Dataset d;
  d.data = Tensor({count, frames, n, n});
  d.manifest = {n, base.nu, base.dt, base.record_dt, base.T, base.forcing, base.scheme, {}, kGeneratorVersion};
  for (std::size_t i = 0; i < count; ++i) d.manifest.seeds.push_back(seed0 + i);

  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < static_cast<long>(count); ++i) {
    try {
      NSConfig cfg = base;
      cfg.seed = seed0 + static_cast<std::uint64_t>(i);
      const Trajectory t = ns_solve(cfg);
      std::copy_n(t.frames.data().data(), frames * n * n, d.data.data().data() + static_cast<std::size_t>(i) * frames * n * n);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return d;
}

void save_dataset(const Dataset& d, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_tensor(d.data, dir / "data.gft");
  const auto& m = d.manifest;
  const json j = {{"n", m.n},
                  {"nu", m.nu},
                  {"dt", m.dt},
                  {"record_dt", m.record_dt},
                  {"T", m.T},
                  {"forcing", to_string(m.forcing)},
                  {"scheme", to_string(m.scheme)},
                  {"seeds", m.seeds},
                  {"generator_version", m.generator_version}};
  std::ofstream os(dir / "manifest.json");
  if (!os) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
  os << j.dump(2) << "\n";
}

Dataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw std::runtime_error("no dataset manifest at " + (dir / "manifest.json").string());
  const json j = json::parse(is);
  Dataset d;
  auto& m = d.manifest;
  m.n = j.at("n").get<std::size_t>();
  m.nu = j.at("nu").get<double>();
  m.dt = j.at("dt").get<double>();
  m.record_dt = j.at("record_dt").get<double>();
  m.T = j.at("T").get<std::size_t>();
  m.forcing = parse_forcing(j.at("forcing").get<std::string>());
  m.scheme = parse_scheme(j.value("scheme", std::string("cn_heun")));
  m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  m.generator_version = j.at("generator_version").get<std::string>();
  d.data = read_tensor(dir / "data.gft");
  if (d.data.rank() != 4 || d.data.shape()[1] != m.T + 1 || d.data.shape()[2] != m.n || d.data.shape()[3] != m.n ||
      d.data.shape()[0] != m.seeds.size()) {
    throw ShapeError("dataset tensor " + gfno::to_string(d.data.shape()) + " disagrees with its manifest");
  }
  return d;
}

}  // namespace gfno::pde
