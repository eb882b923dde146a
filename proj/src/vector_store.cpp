#include "logrouter/vector_store.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "logrouter/error.hpp"

namespace logrouter {

using nlohmann::json;

std::map<std::string, std::string> chunk_metadata(const Chunk& chunk) {
  return {{"namespace", chunk.namespace_},
          {"app", chunk.app},
          {"pod", chunk.pod},
          {"level", std::string(severity_name(chunk.dominant_level()))},
          {"dataset", chunk.dataset}};
}

VectorStore::VectorStore(int dim, std::string provider_tag)
    : dim_(dim), provider_tag_(std::move(provider_tag)) {
  if (dim <= 0) throw Error(ErrorCode::kStoreContract, "vector store dim must be positive");
}

void VectorStore::add(Chunk chunk, EmbeddingVector vector) {
  if (static_cast<int>(vector.dim()) != dim_) {
    throw Error(ErrorCode::kStoreContract, "vector dim " + std::to_string(vector.dim()) +
                                               " does not match store dim " + std::to_string(dim_));
  }
  if (provider_tag_.empty()) provider_tag_ = vector.provider_tag;
  auto metadata = chunk_metadata(chunk);
  auto it = by_id_.find(chunk.chunk_id);
  if (it != by_id_.end()) {
    entries_[it->second] = {std::move(chunk), std::move(vector), std::move(metadata)};
    return;
  }
  by_id_[chunk.chunk_id] = entries_.size();
  entries_.push_back({std::move(chunk), std::move(vector), std::move(metadata)});
}

std::vector<std::pair<std::string, double>> VectorStore::search(const EmbeddingVector& query,
                                                                const MetadataFilter& filters,
                                                                std::size_t top_n) const {
  ++accesses_;
  if (static_cast<int>(query.dim()) != dim_) {
    throw Error(ErrorCode::kStoreContract, "query dim " + std::to_string(query.dim()) +
                                               " does not match store dim " + std::to_string(dim_));
  }
  std::vector<std::pair<std::string, double>> scored;
  for (const auto& e : entries_) {
    bool ok = true;
    for (const auto& [key, value] : filters) {
      auto it = e.metadata.find(key);
      if (it == e.metadata.end() || it->second != value) {
        ok = false;
        break;
      }
    }
    if (ok) scored.emplace_back(e.chunk.chunk_id, cosine(query, e.vector));
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (scored.size() > top_n) scored.resize(top_n);
  return scored;
}

const Chunk* VectorStore::find(const std::string& chunk_id) const {
  auto it = by_id_.find(chunk_id);
  return it == by_id_.end() ? nullptr : &entries_[it->second].chunk;
}

namespace {

void put_f32_le(std::ostream& out, float v) {
  auto bits = std::bit_cast<std::uint32_t>(v);
  char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(buf, 4);
}

float get_f32_le(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return std::bit_cast<float>(bits);
}

}  // namespace

void VectorStore::save(const std::filesystem::path& vectors,
                       const std::filesystem::path& manifest) const {
  std::ofstream vout(vectors, std::ios::binary | std::ios::trunc);
  std::ofstream mout(manifest, std::ios::binary | std::ios::trunc);
  if (!vout || !mout) throw Error(ErrorCode::kStoreContract, "cannot write vector store snapshot");
  const json header = {{"dim", dim_}, {"provider_tag", provider_tag_}, {"count", entries_.size()}};
  vout << header.dump() << '\n';
  for (const auto& e : entries_) {
    for (float v : e.vector.values) put_f32_le(vout, v);
    mout << chunk_to_json(e.chunk).dump() << '\n';
  }
}

void VectorStore::load(const std::filesystem::path& vectors, const std::filesystem::path& manifest) {
  std::ifstream vin(vectors, std::ios::binary);
  std::ifstream min(manifest, std::ios::binary);
  if (!vin || !min) throw Error(ErrorCode::kStoreContract, "cannot read vector store snapshot");
  std::string header_line;
  std::getline(vin, header_line);
  json header;
  try {
    header = json::parse(header_line);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kStoreContract, std::string("bad vector snapshot header: ") + e.what());
  }
  const int dim = header.at("dim").get<int>();
  const auto count = header.at("count").get<std::size_t>();
  if (dim != dim_) {
    throw Error(ErrorCode::kStoreContract, "snapshot dim " + std::to_string(dim) +
                                               " does not match store dim " + std::to_string(dim_));
  }
  provider_tag_ = header.value("provider_tag", provider_tag_);
  std::vector<unsigned char> buf(static_cast<std::size_t>(dim) * 4);
  std::string line;
  for (std::size_t i = 0; i < count; ++i) {
    if (!vin.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())) ||
        !std::getline(min, line)) {
      throw Error(ErrorCode::kStoreContract, "vector snapshot truncated at record " + std::to_string(i));
    }
    EmbeddingVector v;
    v.provider_tag = provider_tag_;
    v.values.resize(static_cast<std::size_t>(dim));
    for (int d = 0; d < dim; ++d) v.values[static_cast<std::size_t>(d)] = get_f32_le(&buf[static_cast<std::size_t>(d) * 4]);
    add(chunk_from_json(json::parse(line)), std::move(v));
  }
}

}  // namespace logrouter
