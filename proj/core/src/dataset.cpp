#include "splatinit/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "splatinit/image_io.hpp"

namespace splatinit {

namespace {
using ordered_json = nlohmann::ordered_json;

std::vector<Camera> select(const std::vector<Camera>& cameras, const std::vector<int>& idx) {
  std::vector<Camera> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(cameras[static_cast<size_t>(i)]);
  return out;
}

std::string image_name(size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%03zu.png", i);
  return buf;
}

}  // namespace

std::vector<Camera> Dataset::train_cameras() const { return select(cameras, train_indices); }
std::vector<Camera> Dataset::test_cameras() const { return select(cameras, test_indices); }

void Dataset::validate() const {
  if (cameras.size() != images.size()) {
    throw std::invalid_argument("dataset: camera/image count mismatch");
  }
  for (size_t i = 0; i < cameras.size(); ++i) {
    cameras[i].validate();
    if (images[i].width != cameras[i].width || images[i].height != cameras[i].height ||
        images[i].channels != 3) {
      throw std::invalid_argument("dataset: image " + std::to_string(i) +
                                  " does not match its camera size");
    }
  }
  std::vector<int> seen(cameras.size(), 0);
  auto mark = [&](const std::vector<int>& idx, const char* which) {
    for (int i : idx) {
      if (i < 0 || static_cast<size_t>(i) >= cameras.size()) {
        throw std::invalid_argument("dataset: " + std::string(which) + " index out of range");
      }
      ++seen[static_cast<size_t>(i)];
    }
  };
  mark(train_indices, "train");
  mark(test_indices, "test");
  for (size_t i = 0; i < seen.size(); ++i) {
    if (seen[i] != 1) {
      throw std::invalid_argument("dataset: view " + std::to_string(i) +
                                  (seen[i] == 0 ? " is in neither split" : " is in both splits"));
    }
  }
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  dataset.validate();
  std::filesystem::create_directories(dir / "images");

  ordered_json root;
  root["name"] = dataset.name;
  root["aabb"] = {{"min", {dataset.bounds.min[0], dataset.bounds.min[1], dataset.bounds.min[2]}},
                  {"max", {dataset.bounds.max[0], dataset.bounds.max[1], dataset.bounds.max[2]}}};
  ordered_json cams = ordered_json::array();
  std::vector<char> split(dataset.cameras.size(), 'n');
  for (int i : dataset.train_indices) split[static_cast<size_t>(i)] = 't';
  for (int i : dataset.test_indices) split[static_cast<size_t>(i)] = 'e';

  for (size_t i = 0; i < dataset.cameras.size(); ++i) {
    const Camera& c = dataset.cameras[i];
    ordered_json jc;
    jc["fx"] = c.fx;
    jc["fy"] = c.fy;
    jc["cx"] = c.cx;
    jc["cy"] = c.cy;
    jc["width"] = c.width;
    jc["height"] = c.height;
    ordered_json r = ordered_json::array();
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) r.push_back(c.R(row, col));
    }
    jc["R"] = std::move(r);
    jc["t"] = {c.t[0], c.t[1], c.t[2]};
    jc["near"] = c.near;
    jc["far"] = c.far;
    jc["split"] = split[i] == 't' ? "train" : "test";
    jc["image"] = "images/" + image_name(i);
    cams.push_back(std::move(jc));
    write_png(dataset.images[i], (dir / "images" / image_name(i)).string());
  }
  root["cameras"] = std::move(cams);

  std::ofstream out(dir / "cameras.json", std::ios::binary);
  if (!out) {
    throw std::runtime_error("save_dataset: cannot open " + (dir / "cameras.json").string());
  }
  out << root.dump(2) << "\n";
  if (!out) throw std::runtime_error("save_dataset: write failed in " + dir.string());
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const std::filesystem::path json_path = dir / "cameras.json";
  std::ifstream in(json_path, std::ios::binary);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + json_path.string());
  ordered_json root;
  try {
    in >> root;
  } catch (const std::exception& e) {
    throw std::runtime_error("load_dataset: " + json_path.string() + ": " + e.what());
  }

  Dataset dataset;
  try {
    dataset.name = root.value("name", std::string());
    const auto& aabb = root.at("aabb");
    for (int k = 0; k < 3; ++k) {
      dataset.bounds.min[k] = aabb.at("min").at(static_cast<size_t>(k)).get<double>();
      dataset.bounds.max[k] = aabb.at("max").at(static_cast<size_t>(k)).get<double>();
    }
    const auto& cams = root.at("cameras");
    for (size_t i = 0; i < cams.size(); ++i) {
      const auto& jc = cams.at(i);
      Camera c;
      c.fx = jc.at("fx").get<double>();
      c.fy = jc.at("fy").get<double>();
      c.cx = jc.at("cx").get<double>();
      c.cy = jc.at("cy").get<double>();
      c.width = jc.at("width").get<int>();
      c.height = jc.at("height").get<int>();
      const auto& r = jc.at("R");
      if (r.size() != 9) throw std::runtime_error("camera R must have 9 entries");
      for (int row = 0; row < 3; ++row) {
        for (int col = 0; col < 3; ++col) {
          c.R(row, col) = r.at(static_cast<size_t>(3 * row + col)).get<double>();
        }
      }
      for (int k = 0; k < 3; ++k) c.t[k] = jc.at("t").at(static_cast<size_t>(k)).get<double>();
      c.near = jc.at("near").get<double>();
      c.far = jc.at("far").get<double>();
      const std::string split = jc.at("split").get<std::string>();
      if (split == "train") {
        dataset.train_indices.push_back(static_cast<int>(i));
      } else if (split == "test") {
        dataset.test_indices.push_back(static_cast<int>(i));
      } else {
        throw std::runtime_error("camera " + std::to_string(i) + " has unknown split '" +
                                 split + "'");
      }
      dataset.cameras.push_back(c);
      dataset.images.push_back(read_png((dir / jc.at("image").get<std::string>()).string()));
    }
  } catch (const std::runtime_error&) {
    throw;
  } catch (const std::exception& e) {
    throw std::runtime_error("load_dataset: " + json_path.string() + ": " + e.what());
  }
  dataset.validate();
  return dataset;
}

}  // namespace splatinit
