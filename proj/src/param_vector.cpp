#include <fstream>

#include <nlohmann/json.hpp>

#include "ecodyn/tape.hpp"

namespace ecodyn {

const ParamSegment& ParamVector::segment(const std::string& name) const {
    for (const auto& s : layout)
        if (s.name == name) return s;
    throw ConfigError("ParamVector: no segment named " + name);
}

void ParamVector::save(const std::string& path_base) const {
    std::ofstream bin(path_base + ".bin", std::ios::binary);
    if (!bin) throw DataError("cannot open " + path_base + ".bin");
    bin.write(reinterpret_cast<const char*>(theta.data()),
              static_cast<std::streamsize>(theta.size() * sizeof(double)));

    nlohmann::json segs = nlohmann::json::array();
    for (const auto& s : layout)
        segs.push_back({{"name", s.name}, {"offset", s.offset}, {"length", s.length}});
    nlohmann::json meta{{"size", theta.size()}, {"layout", segs}};
    std::ofstream js(path_base + ".json");
    js << meta.dump(2) << "\n";
}

ParamVector ParamVector::load(const std::string& path_base) {
    std::ifstream js(path_base + ".json");
    if (!js) throw DataError("cannot open " + path_base + ".json");
    nlohmann::json meta = nlohmann::json::parse(js);
    ParamVector p;
    p.theta.resize(meta.at("size").get<std::size_t>());
    for (const auto& s : meta.at("layout"))
        p.layout.push_back({s.at("name"), s.at("offset"), s.at("length")});

    std::ifstream bin(path_base + ".bin", std::ios::binary);
    if (!bin) throw DataError("cannot open " + path_base + ".bin");
    bin.read(reinterpret_cast<char*>(p.theta.data()),
             static_cast<std::streamsize>(p.theta.size() * sizeof(double)));
    if (!bin) throw DataError(path_base + ".bin: truncated");
    return p;
}

}  // namespace ecodyn
