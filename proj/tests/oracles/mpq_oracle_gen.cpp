// Writes seeded archives and their expected contents for the mpyq cross-check.
// Usage: mpq_oracle_gen <out_dir> <count> <seed>

#include <cstdio>
#include <fstream>
#include <random>
#include <string>

#include <json.hpp>

#include "sc2tools/bytes.hpp"
#include "sc2tools/mpq.hpp"

using namespace sc2tools;

int main(int argc, char** argv) {
  if (argc != 4) {
    std::fprintf(stderr, "usage: %s <out_dir> <count> <seed>\n", argv[0]);
    return 2;
  }
  const std::filesystem::path out = argv[1];
  const int count = std::stoi(argv[2]);
  std::mt19937_64 rng(std::stoull(argv[3]));
  std::filesystem::create_directories(out);

  for (int i = 0; i < count; ++i) {
    std::map<std::string, Bytes> files;
    const std::size_t n = rng() % 21;
    for (std::size_t f = 0; f < n; ++f) {
      Bytes data(rng() % 4097);
      // Half the files are repetitive so deflate actually wins.
      const bool text = rng() % 2;
      for (std::size_t b = 0; b < data.size(); ++b) {
        data[b] = text ? static_cast<std::uint8_t>('a' + (b / 7) % 5) : static_cast<std::uint8_t>(rng());
      }
      files["dir" + std::to_string(f % 3) + "\\file_" + std::to_string(f) + ".bin"] = std::move(data);
    }
    mpq::BuildOptions options;
    options.compress = rng() % 2;
    if (rng() % 2) options.user_data = Bytes{'u', 's', 'e', 'r'};

    char stem[16];
    std::snprintf(stem, sizeof stem, "%04d", i);
    write_file(out / (std::string(stem) + ".mpq"), mpq::build_archive(files, options));
    nlohmann::json expected = nlohmann::json::object();
    for (const auto& [name, data] : files) expected[name] = to_hex(data);
    write_file(out / (std::string(stem) + ".json"), expected.dump());
  }
  return 0;
}
