#include "magschrod/field_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace msw {

std::uint64_t fnv1a64(const void* data, std::size_t nbytes) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 1469598103934665603ull;
    for (std::size_t i = 0; i < nbytes; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

namespace {
std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << v;
    return os.str();
}
}  // namespace

void write_field(const std::string& base_path, const ScalarField& f, const std::string& role) {
    const std::size_t nbytes = f.size() * sizeof(cplx);
    {
        std::ofstream raw(base_path + ".raw", std::ios::binary | std::ios::trunc);
        if (!raw) throw std::runtime_error("write_field: cannot open " + base_path + ".raw");
        raw.write(reinterpret_cast<const char*>(f.values().data()), std::streamsize(nbytes));
    }
    nlohmann::ordered_json side;
    side["format"] = "complex-double-le";
    side["n"] = f.grid().n();
    side["box_length"] = f.grid().box_length();
    side["role"] = role;
    side["checksum"] = hex64(fnv1a64(f.values().data(), nbytes));
    std::ofstream js(base_path + ".json", std::ios::trunc);
    if (!js) throw std::runtime_error("write_field: cannot open " + base_path + ".json");
    js << side.dump(2) << "\n";
}

namespace {
nlohmann::json load_sidecar(const std::string& base_path) {
    std::ifstream js(base_path + ".json");
    if (!js) throw std::runtime_error("read_field: missing sidecar " + base_path + ".json");
    nlohmann::json side;
    js >> side;
    return side;
}
}  // namespace

ScalarField read_field(const std::string& base_path) {
    nlohmann::json side = load_sidecar(base_path);
    Grid3 grid(side.at("n").get<int>(), side.at("box_length").get<double>());
    std::vector<cplx> values(grid.num_points());
    const std::size_t nbytes = values.size() * sizeof(cplx);
    std::ifstream raw(base_path + ".raw", std::ios::binary);
    if (!raw) throw std::runtime_error("read_field: missing payload " + base_path + ".raw");
    raw.read(reinterpret_cast<char*>(values.data()), std::streamsize(nbytes));
    if (std::size_t(raw.gcount()) != nbytes)
        throw std::runtime_error("read_field: payload size mismatch for " + base_path);
    raw.peek();
    if (!raw.eof()) throw std::runtime_error("read_field: payload size mismatch for " + base_path);
    const std::string want = side.at("checksum").get<std::string>();
    if (hex64(fnv1a64(values.data(), nbytes)) != want)
        throw std::runtime_error("read_field: checksum mismatch for " + base_path);
    return ScalarField(grid, std::move(values));
}

std::string read_field_role(const std::string& base_path) {
    return load_sidecar(base_path).at("role").get<std::string>();
}

}  // namespace msw
