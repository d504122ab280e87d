#include "checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "errors.hpp"

namespace contpose {

namespace {

constexpr char kMagic[8] = {'C', 'P', 'C', 'K', 'P', 'T', '0', '1'};

std::string act_name(Activation a) {
  return a == Activation::relu ? "relu" : "sigmoid";
}

Activation act_from(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  throw IoError("unknown activation in checkpoint: " + s);
}

std::string kind_name(EncodingKind k) {
  switch (k) {
    case EncodingKind::sinusoidal: return "sinusoidal";
    case EncodingKind::linear: return "linear";
    case EncodingKind::sigmoid_mlp_activation: return "sigmoid_mlp_activation";
  }
  throw IoError("bad encoding kind");
}

EncodingKind kind_from(const std::string& s) {
  if (s == "sinusoidal") return EncodingKind::sinusoidal;
  if (s == "linear") return EncodingKind::linear;
  if (s == "sigmoid_mlp_activation") return EncodingKind::sigmoid_mlp_activation;
  throw IoError("unknown encoding kind in checkpoint: " + s);
}

}  // namespace

nlohmann::json encoding_to_json(const EncodingConfig& cfg) {
  nlohmann::json j;
  j["kind"] = kind_name(cfg.kind);
  j["bands"] = cfg.bands;
  if (cfg.coarse_to_fine)
    j["coarse_to_fine"] = *cfg.coarse_to_fine;
  else
    j["coarse_to_fine"] = nullptr;
  return j;
}

EncodingConfig encoding_from_json(const nlohmann::json& j) {
  EncodingConfig cfg;
  cfg.kind = kind_from(j.at("kind").get<std::string>());
  cfg.bands = j.at("bands").get<int>();
  if (j.contains("coarse_to_fine") && !j.at("coarse_to_fine").is_null())
    cfg.coarse_to_fine = j.at("coarse_to_fine").get<double>();
  return cfg;
}

void save_checkpoint(
    const std::string& path,
    const std::vector<std::pair<std::string, const Mlp*>>& nets,
    const nlohmann::json& extra) {
  nlohmann::json header = extra;
  nlohmann::json jnets = nlohmann::json::object();
  auto order = nlohmann::json::array();
  for (const auto& [name, net] : nets) {
    nlohmann::json jn;
    jn["activation"] = act_name(net->act);
    auto shapes = nlohmann::json::array();
    for (const auto& W : net->w)
      shapes.push_back({W.rows(), W.cols()});
    jn["layers"] = shapes;
    jnets[name] = jn;
    order.push_back(name);
  }
  header["nets"] = jnets;
  header["net_order"] = order;
  const std::string htext = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  const std::uint32_t hlen = static_cast<std::uint32_t>(htext.size());
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(htext.data(), htext.size());
  for (const auto& [name, net] : nets) {
    for (std::size_t l = 0; l < net->w.size(); ++l) {
      out.write(reinterpret_cast<const char*>(net->w[l].data()),
                static_cast<std::streamsize>(net->w[l].size() * sizeof(double)));
      out.write(reinterpret_cast<const char*>(net->b[l].data()),
                static_cast<std::streamsize>(net->b[l].size() * sizeof(double)));
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

nlohmann::json load_checkpoint(
    const std::string& path,
    const std::vector<std::pair<std::string, Mlp*>>& nets) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw IoError("not a checkpoint file: " + path);
  std::uint32_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string htext(hlen, '\0');
  in.read(htext.data(), hlen);
  if (!in) throw IoError("truncated checkpoint header: " + path);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(htext);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad checkpoint header: ") + e.what());
  }

  for (const auto& [name, net] : nets)
    if (!header.at("nets").contains(name))
      throw IoError("checkpoint has no net named " + name);

  // Data blocks follow the saved order; skip blocks nobody asked for.
  for (const auto& jname : header.at("net_order")) {
    const std::string name = jname.get<std::string>();
    const auto& jn = header["nets"][name];
    Mlp* net = nullptr;
    for (const auto& [want, ptr] : nets)
      if (want == name) net = ptr;
    if (!net) {
      std::streamoff skip = 0;
      for (const auto& shape : jn.at("layers")) {
        const auto r = shape.at(0).get<std::streamoff>();
        const auto c = shape.at(1).get<std::streamoff>();
        skip += (r * c + r) * static_cast<std::streamoff>(sizeof(double));
      }
      in.seekg(skip, std::ios::cur);
      continue;
    }
    net->act = act_from(jn.at("activation").get<std::string>());
    net->w.clear();
    net->b.clear();
    for (const auto& shape : jn.at("layers")) {
      const Eigen::Index rows = shape.at(0).get<Eigen::Index>();
      const Eigen::Index cols = shape.at(1).get<Eigen::Index>();
      Eigen::MatrixXd W(rows, cols);
      in.read(reinterpret_cast<char*>(W.data()),
              static_cast<std::streamsize>(W.size() * sizeof(double)));
      Eigen::VectorXd B(rows);
      in.read(reinterpret_cast<char*>(B.data()),
              static_cast<std::streamsize>(B.size() * sizeof(double)));
      net->w.push_back(std::move(W));
      net->b.push_back(std::move(B));
    }
  }
  if (!in) throw IoError("truncated checkpoint data: " + path);
  return header;
}

}  // namespace contpose
