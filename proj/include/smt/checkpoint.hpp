#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "smt/tensor.hpp"

namespace smt {

// Single-file archive of named tensors plus a free-form JSON meta record:
// "SMTC" | version u32 | header_len u64 | header JSON | raw payload.
// Offsets in the header are relative to the payload start.

template <typename T>
struct Archive {
  nlohmann::json meta;
  std::map<std::string, Tensor<T>> arrays;
};

namespace detail {

template <typename T>
constexpr const char* dtype_name() {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8, "archive supports f32/f64 only");
  return sizeof(T) == 4 ? "f32" : "f64";
}

}  // namespace detail

template <typename T>
void write_archive(const std::filesystem::path& path, const nlohmann::json& meta,
                   const std::vector<std::pair<std::string, const Tensor<T>*>>& arrays) {
  nlohmann::json header;
  header["meta"] = meta;
  header["entries"] = nlohmann::json::array();
  uint64_t offset = 0;
  for (const auto& [name, t] : arrays) {
    header["entries"].push_back({{"name", name},
                                 {"dtype", detail::dtype_name<T>()},
                                 {"shape", t->shape},
                                 {"offset", offset}});
    offset += t->numel() * sizeof(T);
  }
  std::string hdr = header.dump();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + path.string());
  os.write("SMTC", 4);
  uint32_t ver = 1;
  uint64_t hlen = hdr.size();
  os.write(reinterpret_cast<const char*>(&ver), 4);
  os.write(reinterpret_cast<const char*>(&hlen), 8);
  os.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));
  for (const auto& [name, t] : arrays)
    os.write(reinterpret_cast<const char*>(t->data()),
             static_cast<std::streamsize>(t->numel() * sizeof(T)));
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

template <typename T>
Archive<T> read_archive(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::string(magic, 4) != "SMTC")
    throw std::runtime_error("bad archive magic: " + path.string());
  uint32_t ver = 0;
  uint64_t hlen = 0;
  is.read(reinterpret_cast<char*>(&ver), 4);
  is.read(reinterpret_cast<char*>(&hlen), 8);
  if (ver != 1) throw std::runtime_error("unsupported archive version in " + path.string());
  std::string hdr(hlen, '\0');
  is.read(hdr.data(), static_cast<std::streamsize>(hlen));
  if (!is) throw std::runtime_error("truncated archive header: " + path.string());
  nlohmann::json header = nlohmann::json::parse(hdr);

  Archive<T> out;
  out.meta = header.at("meta");
  const std::streampos payload_start = is.tellg();
  for (const auto& e : header.at("entries")) {
    std::string name = e.at("name");
    if (e.at("dtype") != detail::dtype_name<T>())
      throw std::runtime_error("archive entry " + name + " has dtype " +
                               e.at("dtype").get<std::string>() + ", expected " +
                               detail::dtype_name<T>());
    Tensor<T> t(e.at("shape").get<std::vector<int>>());
    is.seekg(payload_start + static_cast<std::streamoff>(e.at("offset").get<uint64_t>()));
    is.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(T)));
    if (!is) throw std::runtime_error("archive truncated at entry " + name);
    out.arrays.emplace(std::move(name), std::move(t));
  }
  return out;
}

}  // namespace smt
