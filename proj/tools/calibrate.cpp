// Recomputes the frozen constants fixture. Run only when the bounds change.

#include <fstream>
#include <iostream>

#include "randpoly/selftest.hpp"

int main(int argc, char** argv)
{
    const std::string path = argc > 1 ? argv[1] : randpoly::selftest::default_fixture_path();
    const auto j = randpoly::selftest::calibrate_fixture(randpoly::default_workers());
    std::ofstream out(path);
    if (!out) {
        std::cerr << "cannot write " << path << "\n";
        return 1;
    }
    out << j.dump(2) << "\n";
    std::cout << j.dump(2) << "\n";
    return 0;
}
