from spatialmss.main import main

main()
