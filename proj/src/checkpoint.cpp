#include <fstream>
#include <nlohmann/json.hpp>

#include "gfno/operator.hpp"

namespace gfno::model {

using nlohmann::json;

void Model::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  const json cfg = {{"variant", to_string(cfg_.variant)}, {"group", group::to_string(cfg_.group)},
                    {"d_z", cfg_.d_z},   {"k", cfg_.k},
                    {"layers", cfg_.layers}, {"pos_enc", to_string(cfg_.pos_enc)},
                    {"in_steps", cfg_.in_steps}};
  std::ofstream os(dir / "config.json");
  if (!os) throw std::runtime_error("cannot write " + (dir / "config.json").string());
  os << cfg.dump(2) << "\n";
  for (const auto& p : params_) write_tensor(p->value, dir / (p->name + ".gft"));
}

Model Model::load(const std::filesystem::path& dir) {
  std::ifstream is(dir / "config.json");
  if (!is) throw std::runtime_error("no checkpoint config at " + (dir / "config.json").string());
  const json j = json::parse(is);
  ModelConfig cfg;
  cfg.variant = parse_variant(j.at("variant").get<std::string>());
  cfg.group = group::parse_group(j.at("group").get<std::string>());
  cfg.d_z = j.at("d_z").get<std::size_t>();
  cfg.k = j.at("k").get<std::size_t>();
  cfg.layers = j.at("layers").get<std::size_t>();
  cfg.pos_enc = parse_pos_enc(j.at("pos_enc").get<std::string>());
  cfg.in_steps = j.at("in_steps").get<std::size_t>();
  Model m(cfg, 0);
  for (auto& p : m.params_) {
    Tensor v = read_tensor(dir / (p->name + ".gft"));
    if (v.shape() != p->value.shape() || v.dtype() != p->value.dtype()) {
      throw ShapeError("checkpoint tensor " + p->name + " has shape " + gfno::to_string(v.shape()) + ", expected " +
                       gfno::to_string(p->value.shape()));
    }
    p->value = std::move(v);
    p->zero_grad();
  }
  return m;
}

}  // namespace gfno::model
