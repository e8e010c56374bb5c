#include <iostream>

#include "dbyz/acceptance.hpp"

int main() { return dbyz::acceptance::run_all(std::cout) ? 1 : 0; }
