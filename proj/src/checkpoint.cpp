#include "xtasnet/checkpoint.hpp"

#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace xtasnet {

namespace {

void write_raw_f32(const fs::path& path, const MatrixX<float>& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write tensor file: " + path.string());
  // Row-major layout regardless of in-memory storage order.
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      const float v = m(r, c);
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
  }
  if (!out) throw IoError("failed writing tensor file: " + path.string());
}

MatrixX<float> read_raw_f32(const fs::path& path, Index rows, Index cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read tensor file: " + path.string());
  MatrixX<float> m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      float v;
      in.read(reinterpret_cast<char*>(&v), sizeof(v));
      if (!in)
        throw IoError("tensor file truncated: " + path.string());
      m(r, c) = v;
    }
  }
  return m;
}

}  // namespace

void save_checkpoint(const std::string& dir, const std::string& tag,
                     const std::vector<CheckpointTensor>& tensors,
                     const nlohmann::json& meta) {
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root / "tensors", ec);
  if (ec) throw IoError("cannot create checkpoint directory: " + dir);

  nlohmann::json desc;
  desc["format_version"] = 1;
  desc["tag"] = tag;
  desc["meta"] = meta;
  desc["tensors"] = nlohmann::json::array();
  for (const auto& t : tensors) {
    write_raw_f32(root / "tensors" / (t.name + ".bin"), *t.data);
    desc["tensors"].push_back({{"name", t.name},
                               {"shape", {t.data->rows(), t.data->cols()}},
                               {"dtype", "f32"},
                               {"kind", t.kind}});
  }
  std::ofstream out(root / "descriptor.json", std::ios::trunc);
  if (!out) throw IoError("cannot write descriptor.json under " + dir);
  out << desc.dump(2) << '\n';
}

LoadedCheckpoint load_checkpoint(const std::string& dir) {
  const fs::path root(dir);
  std::ifstream in(root / "descriptor.json");
  if (!in)
    throw IoError("cannot open checkpoint descriptor: " +
                  (root / "descriptor.json").string());
  nlohmann::json desc;
  try {
    in >> desc;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed descriptor.json under " + dir + ": " + e.what());
  }
  LoadedCheckpoint ckpt;
  ckpt.tag = desc.value("tag", "");
  ckpt.meta = desc.value("meta", nlohmann::json::object());
  for (const auto& t : desc.at("tensors")) {
    const std::string name = t.at("name").get<std::string>();
    const auto shape = t.at("shape");
    if (t.value("dtype", "f32") != "f32")
      throw IoError("unsupported tensor dtype in checkpoint: " + dir);
    ckpt.tensors.emplace(
        name, read_raw_f32(root / "tensors" / (name + ".bin"),
                           shape.at(0).get<Index>(), shape.at(1).get<Index>()));
  }
  return ckpt;
}

void assign_tensor(const LoadedCheckpoint& ckpt, const std::string& name,
                   MatrixX<float>& dst) {
  const auto it = ckpt.tensors.find(name);
  if (it == ckpt.tensors.end())
    throw IoError("checkpoint is missing tensor: " + name);
  if (it->second.rows() != dst.rows() || it->second.cols() != dst.cols())
    throw ShapeError("checkpoint tensor shape mismatch for " + name);
  dst = it->second;
}

}  // namespace xtasnet
