#include "warp/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include "warp/assembler.hpp"

namespace warp {
namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + p.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::int64_t parse_int(const std::string& s) {
  std::size_t used = 0;
  const std::string t = trim(s);
  const bool neg = !t.empty() && t[0] == '-';
  const std::uint64_t mag = std::stoull(neg ? t.substr(1) : t, &used, 0);
  if (used != t.size() - (neg ? 1 : 0)) throw std::invalid_argument("bad integer '" + s + "'");
  return neg ? -static_cast<std::int64_t>(mag) : static_cast<std::int64_t>(mag);
}

FillSpec parse_fill(const std::string& label, const std::string& value) {
  FillSpec f;
  f.label = label;
  std::vector<std::string> parts;
  std::stringstream ss(value);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.size() != 1 && parts.size() != 3) throw std::invalid_argument("fill expects count[:lo:hi]");
  const auto count = parse_int(parts[0]);
  if (count < 0 || count > kMaxDataBytes / 4) throw std::invalid_argument("bad fill count");
  f.count = static_cast<std::uint32_t>(count);
  if (parts.size() == 3) {
    f.lo = parse_int(parts[1]);
    f.hi = parse_int(parts[2]);
    if (f.lo > f.hi) throw std::invalid_argument("fill range is empty");
    if (f.lo < -(1ll << 31) || f.hi > 0xffffffffll) throw std::invalid_argument("fill range exceeds 32 bits");
  }
  return f;
}

}  // namespace

bool Benchmark::has_tag(const std::string& tag) const {
  return std::find(tags.begin(), tags.end(), tag) != tags.end();
}

Program Benchmark::program(const CpuFeatures& features) const { return program(features, seed); }

Program Benchmark::program(const CpuFeatures& features, std::uint64_t data_seed) const {
  Program p = assemble(source, features);
  fill_data(p, fills, data_seed);
  return p;
}

void fill_data(Program& program, const std::vector<FillSpec>& fills, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (const auto& f : fills) {
    const std::uint32_t addr = program.label(f.label);
    if (addr < program.data_base ||
        static_cast<std::uint64_t>(addr - program.data_base) + 4ull * f.count > program.data.size())
      throw std::invalid_argument("fill '" + f.label + "' exceeds the data image");
    std::uniform_int_distribution<std::int64_t> dist(f.lo, f.hi);
    std::size_t off = addr - program.data_base;
    for (std::uint32_t i = 0; i < f.count; ++i, off += 4) {
      const auto v = static_cast<std::uint32_t>(dist(rng));
      for (int b = 0; b < 4; ++b) program.data[off + b] = static_cast<std::uint8_t>(v >> (8 * b));
    }
  }
}

Benchmark parse_benchmark(const std::string& name, const std::string& source, const std::string& meta,
                          std::uint64_t seed) {
  Benchmark b;
  b.name = name;
  b.source = source;
  b.seed = seed;
  b.oracle = name;
  std::stringstream ss(meta);
  int lineno = 0;
  for (std::string line; std::getline(ss, line);) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument(name + "/meta line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "description") {
        b.description = value;
      } else if (key == "tags") {
        std::stringstream ts(value);
        for (std::string t; std::getline(ts, t, ',');) {
          t = trim(t);
          if (std::find(kCorpusTags.begin(), kCorpusTags.end(), t) == kCorpusTags.end())
            throw std::invalid_argument("unknown tag '" + t + "'");
          b.tags.push_back(t);
        }
      } else if (key == "oracle") {
        b.oracle = value;
      } else if (key == "expect") {
        if (value != "eligible") {
          b.expected = parse_reject_reason(value);
          if (!b.expected) throw std::invalid_argument("unknown rejection '" + value + "'");
        }
      } else if (key.rfind("fill.", 0) == 0) {
        b.fills.push_back(parse_fill(key.substr(5), value));
      } else {
        throw std::invalid_argument("unknown key '" + key + "'");
      }
    } catch (const std::logic_error& e) {
      throw std::invalid_argument(name + "/meta line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return b;
}

Benchmark load_benchmark(const std::string& dir) {
  const fs::path d(dir);
  const std::string name = d.filename().string();
  std::uint64_t seed = 1;
  if (fs::exists(d / "gen-seed")) seed = static_cast<std::uint64_t>(parse_int(read_file(d / "gen-seed")));
  return parse_benchmark(name, read_file(d / "kernel.s"), read_file(d / "meta"), seed);
}

std::vector<Benchmark> load_corpus(const std::string& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("corpus directory not found: " + dir);
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory() && fs::exists(e.path() / "kernel.s")) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  std::vector<Benchmark> out;
  for (const auto& d : dirs) out.push_back(load_benchmark(d.string()));
  return out;
}

namespace {

// Word view of a data image; words are cached and written back by bytes().
class Image {
 public:
  explicit Image(const Program& p) : p_(p), mem_(p.data) {}

  std::uint32_t& at(const std::string& label, std::uint32_t i) {
    const std::size_t off = p_.label(label) - p_.data_base + 4ull * i;
    if (off + 4 > mem_.size()) throw std::out_of_range("reference access outside " + label);
    auto [it, fresh] = words_.try_emplace(off, 0u);
    if (fresh)
      for (int b = 0; b < 4; ++b) it->second |= static_cast<std::uint32_t>(mem_[off + b]) << (8 * b);
    return it->second;
  }
  std::vector<std::uint8_t> bytes() {
    for (const auto& [off, v] : words_)
      for (int b = 0; b < 4; ++b) mem_[off + b] = static_cast<std::uint8_t>(v >> (8 * b));
    return mem_;
  }

 private:
  const Program& p_;
  std::vector<std::uint8_t> mem_;
  std::map<std::size_t, std::uint32_t> words_;
};

std::uint32_t bit_reverse(std::uint32_t x) {
  std::uint32_t r = 0;
  for (int i = 0; i < 32; ++i) r |= ((x >> i) & 1u) << (31 - i);
  return r;
}

using Model = std::function<void(Image&)>;

const std::map<std::string, Model>& models() {
  static const std::map<std::string, Model> table = {
      {"brev", [](Image& m) { for (std::uint32_t i = 0; i < 4096; ++i) m.at("dst", i) = bit_reverse(m.at("src", i)); }},
      {"matmul",
       [](Image& m) {
         for (std::uint32_t i = 0; i < 32; ++i)
           for (std::uint32_t j = 0; j < 32; ++j) {
             std::uint32_t acc = 0;
             for (std::uint32_t k = 0; k < 32; ++k) acc += m.at("A", i * 32 + k) * m.at("B", k * 32 + j);
             m.at("C", i * 32 + j) = acc;
           }
       }},
      {"fir",
       [](Image& m) {
         for (std::uint32_t n = 0; n < 256; ++n) {
           std::uint32_t acc = 0;
           for (std::uint32_t k = 0; k < 32; ++k) acc += m.at("h", k) * m.at("x", n + k);
           m.at("y", n) = acc;
         }
       }},
      {"crc",
       [](Image& m) {
         for (std::uint32_t i = 0; i < 2048; ++i) {
           std::uint32_t x = m.at("src", i);
           for (int r = 0; r < 8; ++r) x = (x << 1) ^ ((x >> 31) ? 0x04C11DB7u : 0u);
           m.at("dst", i) = x;
         }
       }},
      {"memset", [](Image& m) { for (std::uint32_t i = 0; i < 4096; ++i) m.at("dst", i) = 0x5a5a5a5au; }},
      {"accum",
       [](Image& m) {
         std::uint32_t s = 0;
         for (std::uint32_t i = 0; i < 4096; ++i) s += m.at("src", i);
         m.at("result", 0) = s;
       }},
      {"clamp",
       [](Image& m) {
         for (std::uint32_t i = 0; i < 2048; ++i) {
           const auto x = static_cast<std::int32_t>(m.at("src", i));
           m.at("dst", i) = static_cast<std::uint32_t>(std::clamp(x, -1000, 1000));
         }
       }},
      {"indirect",
       [](Image& m) { for (std::uint32_t i = 0; i < 1024; ++i) m.at("dst", i) = m.at("table", m.at("idx", i)); }},
      {"callloop", [](Image& m) { for (std::uint32_t i = 0; i < 1024; ++i) m.at("dst", i) = 3 * m.at("src", i) + 1; }},
      {"divloop", [](Image& m) { for (std::uint32_t i = 0; i < 1024; ++i) m.at("dst", i) = m.at("src", i) / 7; }},
      {"strlen",
       [](Image& m) {
         std::uint32_t n = 0;
         while (m.at("str", n) != 0) ++n;
         m.at("result", 0) = n;
       }},
      {"nested",
       [](Image& m) {
         for (std::uint32_t i = 0; i < 1024; ++i) {
           std::uint32_t x = m.at("src", i);
           do x >>= 1; while (static_cast<std::int32_t>(x) > 0x0fffffff);
           m.at("dst", i) = x;
         }
       }},
      {"vecmul",
       [](Image& m) { for (std::uint32_t i = 0; i < 1024; ++i) m.at("dst", i) = m.at("a", i) * m.at("b", i); }},
  };
  return table;
}

}  // namespace

std::optional<std::vector<std::uint8_t>> reference_memory(const Benchmark& bench, const Program& initial) {
  const auto it = models().find(bench.oracle);
  if (it == models().end()) return std::nullopt;
  Image img(initial);
  it->second(img);
  return img.bytes();
}

}  // namespace warp
