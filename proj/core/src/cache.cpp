#include "speclab/cache.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include "speclab/rng.hpp"

namespace speclab::cache {

namespace {

constexpr char kMagic[8] = {'S', 'L', 'E', 'I', 'G', 'S', '0', '1'};

template <class T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
void get(std::istream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof v);
}

void put_string(std::ostream& out, const std::string& s) {
    const std::uint64_t len = s.size();
    put(out, len);
    out.write(s.data(), std::streamsize(len));
}

std::string get_string(std::istream& in) {
    std::uint64_t len = 0;
    get(in, len);
    if (len > (1u << 20)) throw Error("cache: corrupt string length");
    std::string s(len, '\0');
    in.read(s.data(), std::streamsize(len));
    return s;
}

}  // namespace

void save_eigensystem(const model::Eigensystem& sys, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    out.write(kMagic, sizeof kMagic);
    put<std::uint32_t>(out, 1);  // version
    put<std::uint32_t>(out, std::uint32_t(sys.grid().dimension()));
    put<std::uint64_t>(out, sys.grid().points_per_axis());
    put(out, sys.grid().half_width());

    const model::PotentialSpec& p = sys.potential();
    put<std::uint32_t>(out, std::uint32_t(p.kind()));
    put(out, p.c1());
    put(out, p.tau1());
    put(out, p.c2());
    put(out, p.tau2());
    put(out, p.nu());
    put(out, p.m_nu());
    put<std::uint32_t>(out, std::uint32_t(p.confined_axes()));
    put_string(out, p.describe());

    put(out, sys.lambda_max());
    put(out, sys.harvest_cap());
    put(out, sys.max_residual());
    put<std::uint64_t>(out, sys.size());
    for (std::size_t k = 0; k < sys.size(); ++k) put(out, sys.value(k));
    for (std::size_t k = 0; k < sys.size(); ++k) {
        const auto v = sys.vector(k);
        out.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size() * sizeof(double)));
    }
    if (!out) throw Error("failed writing eigensystem cache to " + path);
}

model::Eigensystem load_eigensystem(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0)
        throw Error(path + " is not an eigensystem cache");
    std::uint32_t version = 0, d = 0;
    std::uint64_t n = 0;
    double half_width = 0.0;
    get(in, version);
    if (version != 1) throw Error(path + ": unsupported cache version");
    get(in, d);
    get(in, n);
    get(in, half_width);

    std::uint32_t kind = 0, d1 = 1;
    double c1, tau1, c2, tau2, nu, m_nu;
    get(in, kind);
    get(in, c1);
    get(in, tau1);
    get(in, c2);
    get(in, tau2);
    get(in, nu);
    get(in, m_nu);
    get(in, d1);
    const std::string desc = get_string(in);

    model::PotentialSpec p;
    switch (model::PotentialKind(kind)) {
        case model::PotentialKind::PowerLaw:
            p = model::PotentialSpec::power_law(tau1);
            break;
        case model::PotentialKind::Anisotropic:
            p = model::PotentialSpec::anisotropic(tau1, int(d1));
            break;
        case model::PotentialKind::TwoSidedPower:
            p = model::PotentialSpec::two_sided(c1, tau1, c2, tau2, {}, nu, m_nu, desc);
            break;
        case model::PotentialKind::Free:
            p = model::PotentialSpec::free_potential();
            break;
        default:
            throw Error(path + ": unknown potential kind in cache");
    }
    if (model::PotentialKind(kind) != model::PotentialKind::TwoSidedPower &&
        model::PotentialKind(kind) != model::PotentialKind::Free)
        p.set_gradient_growth(nu, m_nu);

    double lambda_max, harvest_cap, max_residual;
    std::uint64_t count = 0;
    get(in, lambda_max);
    get(in, harvest_cap);
    get(in, max_residual);
    get(in, count);
    if (!in) throw Error(path + ": truncated cache header");

    const model::Grid grid = model::Grid::make(int(d), half_width, std::size_t(n));
    std::vector<double> values(count);
    for (auto& v : values) get(in, v);
    std::vector<std::vector<double>> vectors(count, std::vector<double>(grid.total_points()));
    for (auto& v : vectors)
        in.read(reinterpret_cast<char*>(v.data()), std::streamsize(v.size() * sizeof(double)));
    if (!in) throw Error(path + ": truncated cache payload");
    return model::Eigensystem::from_parts(grid, std::move(p), lambda_max, harvest_cap,
                                          std::move(values), std::move(vectors), max_residual);
}

std::string eigensystem_key(const model::PotentialSpec& p, const model::Grid& grid,
                            double lambda_max) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "%s|d=%d|n=%zu|L=%.17g|lmax=%.17g", p.describe().c_str(),
                  grid.dimension(), grid.points_per_axis(), grid.half_width(), lambda_max);
    char out[32];
    std::snprintf(out, sizeof out, "eig-%016llx",
                  static_cast<unsigned long long>(fnv1a(buf)));
    return out;
}

}  // namespace speclab::cache
