from tca.main import main

main()
